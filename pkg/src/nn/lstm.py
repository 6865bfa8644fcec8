"""Long short-term memory cells, unrolling and the bidirectional pass.

Stacked gate matrices use the order (i, f, g, o); checkpoints record it.
"""

from dataclasses import dataclass
from typing import List, Mapping, Optional, Sequence

import numpy as np

from ..autodiff import Graph, Node, concat, sigmoid, tanh
from ..errors import ShapeError
from .layers import linear
from .params import ParamStore, uniform_init

GATE_ORDER = "ifgo"


@dataclass(frozen=True)
class LstmParams:
    w_x: Node  # 4H x I
    w_h: Node  # 4H x H
    b: Node  # 4H

    def __post_init__(self):
        four_h, n_in = self.w_x.shape
        if four_h % 4 or self.w_h.shape != (four_h, four_h // 4) or self.b.shape != (four_h,):
            raise ShapeError(
                f"lstm params inconsistent: w_x {self.w_x.shape}, w_h {self.w_h.shape}, b {self.b.shape}"
            )

    @property
    def hidden_size(self) -> int:
        return self.b.shape[0] // 4

    @property
    def input_size(self) -> int:
        return self.w_x.shape[1]

    @classmethod
    def bind(cls, nodes: Mapping[str, Node], prefix: str) -> "LstmParams":
        return cls(nodes[f"{prefix}.w_x"], nodes[f"{prefix}.w_h"], nodes[f"{prefix}.b"])


def init_lstm(store: ParamStore, prefix: str, input_size: int, hidden_size: int,
              rng: np.random.Generator) -> None:
    """Add an LSTM's parameters to the store; forget-gate bias starts at 1."""
    H = hidden_size
    store.add(f"{prefix}.w_x", uniform_init(rng, (4 * H, input_size), H))
    store.add(f"{prefix}.w_h", uniform_init(rng, (4 * H, H), H))
    b = np.zeros(4 * H)
    b[H:2 * H] = 1.0
    store.add(f"{prefix}.b", b)


@dataclass(frozen=True)
class LstmState:
    h: Node
    c: Node

    @classmethod
    def zeros(cls, graph: Graph, hidden_size: int, batch_size: Optional[int] = None) -> "LstmState":
        shape = (hidden_size,) if batch_size is None else (batch_size, hidden_size)
        return cls(graph.constant(np.zeros(shape)), graph.constant(np.zeros(shape)))

    @classmethod
    def from_arrays(cls, graph: Graph, h: np.ndarray, c: np.ndarray) -> "LstmState":
        return cls(graph.constant(h), graph.constant(c))


def lstm_step(x: Node, state: LstmState, params: LstmParams) -> LstmState:
    """One step of h_t = tau(x_t, h_{t-1}) for a vector or a batch of rows."""
    H = params.hidden_size
    if x.value.ndim not in (1, 2) or x.shape[-1] != params.input_size:
        raise ShapeError(f"lstm input shape {x.shape} does not end in {params.input_size}")
    expected = x.shape[:-1] + (H,)
    if state.h.shape != expected or state.c.shape != expected:
        raise ShapeError(f"lstm state shapes {state.h.shape}/{state.c.shape} != {expected}")
    gates = linear(params.w_x, x) + linear(params.w_h, state.h) + params.b
    i = sigmoid(gates[..., 0:H])
    f = sigmoid(gates[..., H:2 * H])
    g = tanh(gates[..., 2 * H:3 * H])
    o = sigmoid(gates[..., 3 * H:4 * H])
    c = f * state.c + i * g
    h = o * tanh(c)
    return LstmState(h, c)


def unroll(xs: Sequence[Node], state: LstmState, params: LstmParams,
           masks: Optional[Sequence[np.ndarray]] = None) -> List[LstmState]:
    """Run lstm_step over xs.

    masks holds one (B, 1) array of 0/1 per step; where it is 0 the state
    is carried through unchanged.
    """
    if not xs:
        raise ShapeError("unroll needs a non-empty sequence")
    if masks is not None and len(masks) != len(xs):
        raise ShapeError(f"{len(masks)} masks for {len(xs)} steps")
    states = []
    for t, x in enumerate(xs):
        new = lstm_step(x, state, params)
        if masks is not None:
            keep = 1.0 - masks[t]
            new = LstmState(new.h * masks[t] + state.h * keep, new.c * masks[t] + state.c * keep)
        state = new
        states.append(state)
    return states


def birnn_forward(xs: Sequence[Node], fwd: LstmParams, bwd: LstmParams,
                  lengths: Optional[Sequence[int]] = None) -> List[Node]:
    """Per-step concat(h_forward_t, h_backward_t); needs the whole sequence.

    For a padded batch, lengths gives each row's true length; the backward
    pass then starts every row from a zero state at its own last step.
    """
    graph = xs[0].graph
    batch = xs[0].shape[0] if xs[0].value.ndim == 2 else None
    forward = unroll(xs, LstmState.zeros(graph, fwd.hidden_size, batch), fwd)
    masks = None
    if lengths is not None:
        lengths = np.asarray(lengths).reshape(-1, 1)
        masks = [(t < lengths).astype(np.float64) for t in reversed(range(len(xs)))]
    backward = unroll(list(reversed(xs)), LstmState.zeros(graph, bwd.hidden_size, batch), bwd, masks)
    backward.reverse()
    return [concat([f.h, b.h]) for f, b in zip(forward, backward)]
