from .gradcheck import GradcheckReport, gradcheck
from .ops import (
    batch_norm,
    conv3d,
    conv_output_size,
    dropout,
    embedding,
    global_avg_pool3d,
    group_norm,
    layer_norm,
    log_softmax,
    max_pool3d,
    softmax,
)
from .tensor import (
    Tape,
    Tensor,
    add,
    add_constant,
    as_tensor,
    backward,
    exp,
    is_grad_enabled,
    linear,
    log,
    matmul,
    mean,
    mul,
    neg,
    no_grad,
    relu,
    reshape,
    sub,
    transpose,
    tsum,
)

__all__ = [
    "GradcheckReport", "Tape", "Tensor", "add", "add_constant", "as_tensor", "backward",
    "batch_norm", "conv3d", "conv_output_size", "dropout", "embedding", "exp",
    "global_avg_pool3d", "gradcheck", "group_norm", "is_grad_enabled", "layer_norm",
    "linear", "log", "log_softmax", "matmul", "max_pool3d", "mean", "mul", "neg",
    "no_grad", "relu", "reshape", "softmax", "sub", "transpose", "tsum",
]
