from .model import (
    VqVaeConfig,
    VqVaeModel,
    decode,
    decode_tokens,
    encode,
    forward,
    quantize,
    reconstruct,
    vq_loss,
)
from .train import (
    VqTrainConfig,
    VqTrainResult,
    save_training_checkpoint,
    sequence_l1,
    tokenize_corpus,
    tokenize_windows,
    train_vqvae,
    validation_l1,
)
