"""Base class for trainable ink models."""

import logging
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..autodiff import Graph, Node, add_n
from ..errors import ContractError, InkDataError, NumericError
from ..models import Alphabet, EncodedSequence, LossBreakdown
from .batch import PaddedBatch
from .params import ParamStore

logger = logging.getLogger(__name__)

KL_TERMS = ("kl_z", "kl_pi")


def item_rng(seed: int, step: int, index: int) -> np.random.Generator:
    """Noise source for one batch item; independent of thread scheduling."""
    return np.random.default_rng([seed, step, index])


class InkModel(ABC):
    """A parameterized model trained by summing per-sequence loss terms.

    Subclasses record the terms of a padded batch on one graph; sharding,
    term weighting and gradient averaging live here.
    """

    kind: str = "base"
    config_cls = None
    # sequences recorded in one graph
    graph_batch: int = 16

    def __init__(self, config, alphabet: Alphabet, params: Optional[ParamStore] = None, seed: int = 0):
        if len(alphabet) != config.alphabet_size:
            raise ContractError(
                f"alphabet has {len(alphabet)} symbols but config expects {config.alphabet_size}"
            )
        self.config = config
        self.alphabet = alphabet
        fresh = self.init_params(np.random.default_rng(seed))
        if params is None:
            params = fresh
        elif params.shapes() != fresh.shapes():
            raise InkDataError(f"{self.kind} parameters do not match the configuration")
        self.params = params

    @abstractmethod
    def init_params(self, rng: np.random.Generator) -> ParamStore:
        """Create freshly initialized parameters."""

    @abstractmethod
    def batch_terms(self, graph: Graph, nodes: Mapping[str, Node], batch: PaddedBatch,
                    rngs: Sequence[np.random.Generator]) -> Dict[str, Node]:
        """Loss terms keyed by LossBreakdown field name, each summed over the batch."""

    def new_graph(self) -> Graph:
        return Graph(self.config.precision)

    def check_labels(self, seq: EncodedSequence):
        """Reject empty sequences and labels outside the alphabet."""
        if len(seq) == 0:
            raise InkDataError("empty sequence")
        if np.any(seq.y >= len(self.alphabet)):
            raise InkDataError(f"label outside alphabet of size {len(self.alphabet)}", field="y")

    def batch_graph(self, batch: Sequence[EncodedSequence], rngs: Sequence[np.random.Generator],
                    kl_weight: float = 1.0) -> Tuple[Graph, Dict[str, Node], Node]:
        """Record the summed loss of a batch; returns the graph, its terms and the weighted total."""
        for seq in batch:
            self.check_labels(seq)
        graph = self.new_graph()
        nodes = graph.bind(self.params)
        terms = self.batch_terms(graph, nodes, PaddedBatch.from_sequences(batch), rngs)
        total = add_n(node * kl_weight if name in KL_TERMS else node for name, node in terms.items())
        return graph, terms, graph.output("total", total)

    def loss_graph(self, seq: EncodedSequence, rng: np.random.Generator,
                   kl_weight: float = 1.0) -> Tuple[Graph, Dict[str, Node], Node]:
        """Record one sequence's loss."""
        return self.batch_graph([seq], [rng], kl_weight)

    def _shard(self, batch: Sequence[EncodedSequence], rngs: Sequence[np.random.Generator], kl_weight: float,
               with_grads: bool) -> Tuple[Dict[str, float], Optional[Dict[str, np.ndarray]]]:
        graph, terms, total = self.batch_graph(batch, rngs, kl_weight)
        values = {}
        for name, node in terms.items():
            value = float(node)
            if not np.isfinite(value):
                raise NumericError(f"non-finite loss term {name}", term=name)
            values[name] = value
        if not with_grads:
            return values, None
        return values, graph.backward(total)

    def _run_batch(self, batch: Sequence[EncodedSequence], kl_weight: float, seed: int, step: int,
                   threads: int, with_grads: bool):
        if not batch:
            raise ContractError("batch must not be empty")
        # shard boundaries depend only on the batch, so results do not depend on threads
        size = self.graph_batch
        shards = [range(start, min(start + size, len(batch))) for start in range(0, len(batch), size)]

        def work(indices: range):
            return self._shard([batch[i] for i in indices], [item_rng(seed, step, i) for i in indices],
                               kl_weight, with_grads)

        if threads > 1 and len(shards) > 1:
            with ThreadPoolExecutor(max_workers=min(threads, len(shards))) as pool:
                results = list(pool.map(work, shards))
        else:
            results = [work(s) for s in shards]

        n = float(len(batch))
        sums = {name: 0.0 for name in LossBreakdown.TERMS}
        for values, _ in results:
            for name, value in values.items():
                sums[name] += value
        breakdown = LossBreakdown(**{name: s / n for name, s in sums.items()}, kl_weight=kl_weight)
        breakdown.total = (
            breakdown.recon_nll + kl_weight * (breakdown.kl_z + breakdown.kl_pi)
            + breakdown.classification + breakdown.eoc_nll
        )
        if not np.isfinite(breakdown.total):
            raise NumericError("non-finite total loss", term="total")
        if not with_grads:
            return breakdown, None

        grads = self.params.zeros_like()
        for _, item_grads in results:
            for name, g in item_grads.items():
                grads[name] += g
        for name in grads:
            grads[name] /= n
        return breakdown, grads

    def training_step(self, batch: Sequence[EncodedSequence], kl_weight: float = 1.0, seed: int = 0,
                      step: int = 0, threads: int = 1) -> Tuple[LossBreakdown, Dict[str, np.ndarray]]:
        """Batch loss (summed over time, averaged over items) and its gradients."""
        return self._run_batch(batch, kl_weight, seed, step, threads, with_grads=True)

    def evaluate(self, batch: Sequence[EncodedSequence], kl_weight: float = 1.0, seed: int = 0,
                 step: int = 0, threads: int = 1) -> LossBreakdown:
        breakdown, _ = self._run_batch(batch, kl_weight, seed, step, threads, with_grads=False)
        return breakdown

    def with_params(self, params: ParamStore) -> "InkModel":
        return type(self)(self.config, self.alphabet, params)

    def describe(self) -> str:
        return f"{self.kind} ({len(self.params)} tensors, {self.params.num_entries} weights)"

