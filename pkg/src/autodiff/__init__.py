"""Dense arrays and reverse-mode differentiation over a recorded graph."""

from .graph import (
    Graph,
    Node,
    add_n,
    clip,
    concat,
    exp,
    log,
    log_softmax,
    matmul,
    reduce_mean,
    reduce_sum,
    relu,
    sigmoid,
    softmax,
    softplus,
    square,
    stop_gradient,
    tanh,
    transpose,
)
from .gradcheck import GradCheckEntry, GradCheckReport, grad_check, relative_error

__all__ = [
    "Graph",
    "Node",
    "add_n",
    "clip",
    "concat",
    "exp",
    "log",
    "log_softmax",
    "matmul",
    "reduce_mean",
    "reduce_sum",
    "relu",
    "sigmoid",
    "softmax",
    "softplus",
    "square",
    "stop_gradient",
    "tanh",
    "transpose",
    "GradCheckEntry",
    "GradCheckReport",
    "grad_check",
    "relative_error",
]
