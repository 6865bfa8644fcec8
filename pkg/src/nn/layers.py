"""Feed-forward layers: one rectified-linear hidden layer and a linear head."""

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ..autodiff import Node, relu, transpose
from .params import ParamStore, uniform_init


@dataclass(frozen=True)
class DenseParams:
    w: Node
    b: Node

    @classmethod
    def bind(cls, nodes: Mapping[str, Node], prefix: str) -> "DenseParams":
        return cls(nodes[f"{prefix}.w"], nodes[f"{prefix}.b"])


@dataclass(frozen=True)
class FeedForwardParams:
    hidden: DenseParams
    out: DenseParams

    @property
    def input_size(self) -> int:
        return self.hidden.w.shape[1]

    @property
    def output_size(self) -> int:
        return self.out.w.shape[0]

    @classmethod
    def bind(cls, nodes: Mapping[str, Node], prefix: str) -> "FeedForwardParams":
        return cls(DenseParams.bind(nodes, f"{prefix}.hidden"), DenseParams.bind(nodes, f"{prefix}.out"))


def init_dense(store: ParamStore, prefix: str, n_in: int, n_out: int, rng: np.random.Generator) -> None:
    """Weights uniform in +-1/sqrt(n_in), zero bias."""
    store.add(f"{prefix}.w", uniform_init(rng, (n_out, n_in), n_in))
    store.add(f"{prefix}.b", np.zeros(n_out))


def init_feed_forward(store: ParamStore, prefix: str, n_in: int, width: int, n_out: int,
                      rng: np.random.Generator) -> None:
    """Register hidden and output dense layers under prefix."""
    init_dense(store, f"{prefix}.hidden", n_in, width, rng)
    init_dense(store, f"{prefix}.out", width, n_out, rng)


def linear(w: Node, x: Node) -> Node:
    """w x for a vector, x w^T for a batch of row vectors."""
    if x.value.ndim == 1:
        return w @ x
    return x @ transpose(w)


def dense(x: Node, p: DenseParams) -> Node:
    """Affine map w x + b, applied row-wise to a batch."""
    return linear(p.w, x) + p.b


def feed_forward(x: Node, p: FeedForwardParams) -> Node:
    """Two dense layers with a ReLU between them."""
    return dense(relu(dense(x, p.hidden)), p.out)
