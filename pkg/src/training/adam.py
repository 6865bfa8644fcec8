"""ADAM with bias correction and a staircase learning-rate schedule."""

import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np

from ..errors import ContractError, ShapeError
from ..models import TrainConfig
from ..nn import ParamStore

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass
class AdamState:
    """First and second moments per parameter plus the update count."""

    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    def __post_init__(self):
        if self.step < 0:
            raise ContractError("adam step must be >= 0")
        if self.m.keys() != self.v.keys():
            raise ContractError("adam moments must cover the same parameters")

    @classmethod
    def zeros(cls, params: Mapping[str, np.ndarray]) -> "AdamState":
        return cls({n: np.zeros_like(a) for n, a in params.items()}, {n: np.zeros_like(a) for n, a in params.items()})


def adam_step(params: ParamStore, grads: Mapping[str, np.ndarray], state: AdamState,
              lr: float) -> Tuple[ParamStore, AdamState]:
    """One bias-corrected ADAM update; inputs are left untouched."""
    if set(grads) != set(params) or set(state.m) != set(params):
        raise ContractError("parameters, gradients and moments must share names")
    step = state.step + 1
    correction1 = 1.0 - BETA1 ** step
    correction2 = 1.0 - BETA2 ** step
    updated, m, v = {}, {}, {}
    for name, value in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != value.shape or state.m[name].shape != value.shape:
            raise ShapeError(f"adam: {name} has shape {value.shape} but gradient {g.shape}")
        m[name] = BETA1 * state.m[name] + (1.0 - BETA1) * g
        v[name] = BETA2 * state.v[name] + (1.0 - BETA2) * g * g
        m_hat = m[name] / correction1
        v_hat = v[name] / correction2
        updated[name] = value - lr * m_hat / (np.sqrt(v_hat) + EPSILON)
    return params.replace(updated), AdamState(m, v, step)


def lr_schedule(step: int, cfg: TrainConfig) -> float:
    """lr0 * decay_rate ** floor(step / decay_steps)."""
    if step < 0:
        raise ContractError(f"step must be >= 0, got {step}")
    return cfg.lr0 * cfg.decay_rate ** (step // cfg.decay_steps)


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    """L2 norm over all gradient arrays together."""
    return math.sqrt(sum(float(np.sum(np.square(g))) for g in grads.values()))


def clip_by_global_norm(grads: Dict[str, np.ndarray], max_norm: float) -> Tuple[Dict[str, np.ndarray], float]:
    """Scale every gradient by max_norm / norm when the joint norm exceeds max_norm."""
    norm = global_norm(grads)
    if norm <= max_norm:
        return grads, norm
    scale = max_norm / norm
    return {name: g * scale for name, g in grads.items()}, norm
