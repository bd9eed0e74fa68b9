"""Cross-modal transformer: audio/text encoders and a shared causal motion decoder."""

from .model import (
    ConfigError,
    XModalConfig,
    XModalModel,
    attention,
    attention_weights,
    causal_mask,
    key_mask,
    sinusoidal_positions,
)
from .train import (
    MusicExample,
    TextExample,
    XmTrainConfig,
    XmTrainResult,
    branch_loss,
    load_xmodal,
    make_batch,
    save_xmodal_checkpoint,
    teacher_forced_accuracy,
    train_xmodal,
)

__all__ = [
    "ConfigError", "MusicExample", "TextExample", "XModalConfig", "XModalModel", "XmTrainConfig",
    "XmTrainResult", "attention", "attention_weights", "branch_loss", "causal_mask", "key_mask",
    "load_xmodal", "make_batch", "save_xmodal_checkpoint", "sinusoidal_positions",
    "teacher_forced_accuracy", "train_xmodal",
]
