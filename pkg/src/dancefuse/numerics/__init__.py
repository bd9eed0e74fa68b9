from .gradcheck import ContractError, grad_check
from .ops import (
    SequenceTooShortError,
    conv1d,
    layer_norm,
    log_softmax_np,
    masked_softmax,
    softmax_cross_entropy,
    straight_through,
    upsample_nearest,
)
from .optim import Adam, AdamState, adam_step
from .rng import make_rng
from .tensor import (
    ShapeError,
    Tensor,
    add,
    as_tensor,
    concat,
    embedding,
    exp,
    log,
    matmul,
    mul,
    no_grad,
    relu,
    reshape,
    tabs,
    tanh,
    transpose,
    tsum,
)

__all__ = [
    "Adam", "AdamState", "ContractError", "SequenceTooShortError", "ShapeError", "Tensor",
    "adam_step", "add", "as_tensor", "concat", "conv1d", "embedding", "exp", "grad_check",
    "layer_norm", "log", "log_softmax_np", "make_rng", "masked_softmax", "matmul", "mul",
    "no_grad", "relu", "reshape", "softmax_cross_entropy", "straight_through", "tabs", "tanh",
    "transpose", "tsum", "upsample_nearest",
]
