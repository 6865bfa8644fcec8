"""Primitive op kernels.

Each kernel pairs a forward function ``(values, attrs) -> (out, cache)`` with a
backward function ``(grad, values, out, cache, attrs) -> input grads``. A
backward entry of ``None`` means no gradient flows to that input.

Vector ops (softmax, log_softmax, concat) work along the last axis, so a
leading batch axis of row vectors passes through unchanged.
"""

from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

Forward = Callable[[Sequence[np.ndarray], Dict[str, Any]], Tuple[np.ndarray, Any]]
Backward = Callable[[np.ndarray, Sequence[np.ndarray], np.ndarray, Any, Dict[str, Any]], List[Optional[np.ndarray]]]


@dataclass(frozen=True)
class Kernel:
    name: str
    arity: int  # -1 for variadic
    forward: Forward
    backward: Backward


def _compatible(a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Equal shapes, a single value on one side, or numpy broadcasting."""
    if a.shape == b.shape:
        return a, b
    if a.size == 1 and a.ndim >= b.ndim:
        return a.reshape(()), b
    if b.size == 1 and b.ndim >= a.ndim:
        return a, b.reshape(())
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ValueError(f"incompatible shapes {a.shape} and {b.shape}") from None
    return a, b


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to an operand's shape."""
    if grad.shape == shape:
        return grad
    if int(np.prod(shape)) == 1:
        return np.asarray(np.sum(grad)).reshape(shape)
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _binary(fn):
    def forward(values, attrs):
        a, b = _compatible(values[0], values[1])
        return fn(a, b), None
    return forward


def _add_backward(g, values, out, cache, attrs):
    return [_unbroadcast(g, values[0].shape), _unbroadcast(g, values[1].shape)]


def _sub_backward(g, values, out, cache, attrs):
    return [_unbroadcast(g, values[0].shape), _unbroadcast(-g, values[1].shape)]


def _mul_backward(g, values, out, cache, attrs):
    a, b = _compatible(values[0], values[1])
    return [_unbroadcast(g * b, values[0].shape), _unbroadcast(g * a, values[1].shape)]


def _div_backward(g, values, out, cache, attrs):
    a, b = _compatible(values[0], values[1])
    return [_unbroadcast(g / b, values[0].shape), _unbroadcast(-g * a / (b * b), values[1].shape)]


def _matmul_forward(values, attrs):
    a, b = values
    if a.ndim not in (1, 2) or b.ndim not in (1, 2) or (a.ndim == 1 and b.ndim == 1):
        raise ValueError(f"matmul needs a matrix operand, got {a.shape} @ {b.shape}")
    inner_a = a.shape[-1]
    inner_b = b.shape[0]
    if inner_a != inner_b:
        raise ValueError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
    return a @ b, None


def _matmul_backward(g, values, out, cache, attrs):
    a, b = values
    if a.ndim == 2 and b.ndim == 2:
        return [g @ b.T, a.T @ g]
    if a.ndim == 2:  # matrix @ vector
        return [np.outer(g, b), a.T @ g]
    return [b @ g, np.outer(a, g)]  # vector @ matrix


def _transpose_forward(values, attrs):
    x = values[0]
    if x.ndim != 2:
        raise ValueError(f"transpose expects a matrix, got shape {x.shape}")
    return x.T.copy(), None


def _transpose_backward(g, values, out, cache, attrs):
    return [g.T]


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _softplus(x: np.ndarray) -> np.ndarray:
    # max(x, 0) + log1p(exp(-|x|)) never overflows
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def _unary(fn, dfn):
    def forward(values, attrs):
        return fn(values[0]), None

    def backward(g, values, out, cache, attrs):
        return [g * dfn(values[0], out)]

    return forward, backward


def _rows_check(x: np.ndarray, op: str):
    if x.ndim not in (1, 2):
        raise ValueError(f"{op} expects a vector or a batch of row vectors, got shape {x.shape}")


def _softmax_forward(values, attrs):
    x = values[0]
    _rows_check(x, "softmax")
    e = np.exp(x - np.max(x, axis=-1, keepdims=True))
    return e / np.sum(e, axis=-1, keepdims=True), None


def _softmax_backward(g, values, out, cache, attrs):
    return [out * (g - np.sum(g * out, axis=-1, keepdims=True))]


def _log_softmax_forward(values, attrs):
    x = values[0]
    _rows_check(x, "log_softmax")
    shifted = x - np.max(x, axis=-1, keepdims=True)
    lse = np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))
    return shifted - lse, None


def _log_softmax_backward(g, values, out, cache, attrs):
    return [g - np.exp(out) * np.sum(g, axis=-1, keepdims=True)]


def _concat_forward(values, attrs):
    for v in values:
        _rows_check(v, "concat")
    leading = {v.shape[:-1] for v in values}
    if len(leading) != 1:
        raise ValueError(f"concat operands disagree on leading shape: {[v.shape for v in values]}")
    sizes = [v.shape[-1] for v in values]
    return np.concatenate(values, axis=-1), sizes


def _concat_backward(g, values, out, sizes, attrs):
    return list(np.split(g, np.cumsum(sizes)[:-1], axis=-1))


def _is_fancy(key) -> bool:
    parts = key if isinstance(key, tuple) else (key,)
    return any(isinstance(p, (np.ndarray, list)) for p in parts)


def _slice_forward(values, attrs):
    x = values[0]
    key = attrs["key"]
    try:
        out = x[key]
    except IndexError as e:
        raise ValueError(f"slice {key!r} out of range for shape {x.shape}: {e}") from None
    return np.array(out, copy=True), None


def _slice_backward(g, values, out, cache, attrs):
    grad = np.zeros_like(values[0])
    key = attrs["key"]
    if _is_fancy(key):
        # gathered rows may repeat
        np.add.at(grad, key, g)
    else:
        grad[key] = g
    return [grad]


def _sum_forward(values, attrs):
    return np.asarray(np.sum(values[0], axis=attrs.get("axis"))), None


def _sum_backward(g, values, out, cache, attrs):
    axis = attrs.get("axis")
    if axis is None:
        return [np.full_like(values[0], g)]
    return [np.broadcast_to(np.expand_dims(g, axis), values[0].shape).copy()]


def _mean_forward(values, attrs):
    return np.asarray(np.mean(values[0])), None


def _mean_backward(g, values, out, cache, attrs):
    return [np.full_like(values[0], g / values[0].size)]


def _clip_forward(values, attrs):
    return np.clip(values[0], attrs["lo"], attrs["hi"]), None


def _clip_backward(g, values, out, cache, attrs):
    x = values[0]
    return [g * ((x >= attrs["lo"]) & (x <= attrs["hi"]))]


def _identity_forward(values, attrs):
    return values[0].copy(), None


def _stop_gradient_backward(g, values, out, cache, attrs):
    return [None]


_tanh_f, _tanh_b = _unary(np.tanh, lambda x, y: 1.0 - y * y)
_sigmoid_f, _sigmoid_b = _unary(_sigmoid, lambda x, y: y * (1.0 - y))
_exp_f, _exp_b = _unary(np.exp, lambda x, y: y)
_log_f, _log_b = _unary(np.log, lambda x, y: 1.0 / x)
_softplus_f, _softplus_b = _unary(_softplus, lambda x, y: _sigmoid(x))
_relu_f, _relu_b = _unary(lambda x: np.maximum(x, 0.0), lambda x, y: (x > 0).astype(x.dtype))
_square_f, _square_b = _unary(np.square, lambda x, y: 2.0 * x)
_neg_f, _neg_b = _unary(np.negative, lambda x, y: -np.ones_like(x))

KERNELS: Dict[str, Kernel] = {
    k.name: k
    for k in (
        Kernel("add", 2, _binary(np.add), _add_backward),
        Kernel("sub", 2, _binary(np.subtract), _sub_backward),
        Kernel("mul", 2, _binary(np.multiply), _mul_backward),
        Kernel("div", 2, _binary(np.divide), _div_backward),
        Kernel("neg", 1, _neg_f, _neg_b),
        Kernel("matmul", 2, _matmul_forward, _matmul_backward),
        Kernel("transpose", 1, _transpose_forward, _transpose_backward),
        Kernel("tanh", 1, _tanh_f, _tanh_b),
        Kernel("sigmoid", 1, _sigmoid_f, _sigmoid_b),
        Kernel("exp", 1, _exp_f, _exp_b),
        Kernel("log", 1, _log_f, _log_b),
        Kernel("softplus", 1, _softplus_f, _softplus_b),
        Kernel("relu", 1, _relu_f, _relu_b),
        Kernel("square", 1, _square_f, _square_b),
        Kernel("softmax", 1, _softmax_forward, _softmax_backward),
        Kernel("log_softmax", 1, _log_softmax_forward, _log_softmax_backward),
        Kernel("concat", -1, _concat_forward, _concat_backward),
        Kernel("slice", 1, _slice_forward, _slice_backward),
        Kernel("sum", 1, _sum_forward, _sum_backward),
        Kernel("mean", 1, _mean_forward, _mean_backward),
        Kernel("clip", 1, _clip_forward, _clip_backward),
        Kernel("stop_gradient", 1, _identity_forward, _stop_gradient_backward),
    )
}
