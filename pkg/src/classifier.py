"""Stacked recurrent character recognizer.

Each layer reads the previous layer's per-step features; with
``bidirectional`` set a layer runs a forward and a backward LSTM and
concatenates their states, otherwise it is forward-only. A rectified-linear
projection maps the top features to K class logits.
"""

import logging
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from .autodiff import Graph, Node, add_n, reduce_sum, softmax
from .distributions import Categorical
from .errors import InkDataError
from .models import ClassifierConfig, EncodedSequence
from .nn import (
    FeedForwardParams,
    InkModel,
    LstmParams,
    LstmState,
    PaddedBatch,
    ParamStore,
    birnn_forward,
    feed_forward,
    init_feed_forward,
    init_lstm,
    unroll,
)

logger = logging.getLogger(__name__)


class Classifier(InkModel):
    kind = "classifier"
    config_cls = ClassifierConfig

    @property
    def feature_size(self) -> int:
        H = self.config.hidden_size
        return 2 * H if self.config.bidirectional else H

    def init_params(self, rng: np.random.Generator) -> ParamStore:
        cfg = self.config
        store = ParamStore()
        n_in = cfg.input_size
        for layer in range(cfg.num_layers):
            init_lstm(store, f"layer{layer}.fwd", n_in, cfg.hidden_size, rng)
            if cfg.bidirectional:
                init_lstm(store, f"layer{layer}.bwd", n_in, cfg.hidden_size, rng)
            n_in = self.feature_size
        init_feed_forward(store, "proj", n_in, cfg.projection_size, cfg.alphabet_size, rng)
        return store

    def step_logits(self, nodes: Mapping[str, Node], features: List[Node],
                    lengths: Optional[np.ndarray] = None) -> List[Node]:
        """Class logits per step; features are vectors, or padded batch rows with their lengths."""
        for layer in range(self.config.num_layers):
            fwd = LstmParams.bind(nodes, f"layer{layer}.fwd")
            if self.config.bidirectional:
                features = birnn_forward(features, fwd, LstmParams.bind(nodes, f"layer{layer}.bwd"), lengths)
            else:
                batch = features[0].shape[0] if features[0].value.ndim == 2 else None
                states = unroll(features, LstmState.zeros(features[0].graph, fwd.hidden_size, batch), fwd)
                features = [s.h for s in states]
        proj = FeedForwardParams.bind(nodes, "proj")
        return [feed_forward(f, proj) for f in features]

    def batch_terms(self, graph: Graph, nodes: Mapping[str, Node], batch: PaddedBatch,
                    rngs: Sequence[np.random.Generator]) -> Dict[str, Node]:
        features = [graph.constant(batch.deltas[t]) for t in range(batch.steps)]
        logits = self.step_logits(nodes, features, batch.lengths)
        # each sequence contributes its mean per-step cross-entropy
        weights = batch.mask / batch.lengths[None, :]
        nll = [reduce_sum(Categorical.from_logits(l).cross_entropy(batch.y[t]) * weights[t])
               for t, l in enumerate(logits)]
        return {"classification": add_n(nll)}

    def classify(self, seq: EncodedSequence) -> np.ndarray:
        """T x K class probabilities, one row per stroke."""
        if len(seq) == 0:
            raise InkDataError("cannot classify an empty sequence")
        graph = self.new_graph()
        features = [graph.constant(row) for row in seq.deltas]
        logits = self.step_logits(graph.bind(self.params), features)
        return np.stack([softmax(l).value.astype(np.float64) for l in logits])

    def predict(self, seq: EncodedSequence) -> np.ndarray:
        return np.argmax(self.classify(seq), axis=1)


def classifier_loss(classifier: Classifier, seq: EncodedSequence, labels: Optional[Sequence[int]] = None) -> float:
    """Mean per-step cross-entropy against labels (the sequence's own by default)."""
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int64).reshape(-1)
        if len(labels) != len(seq):
            raise InkDataError("label length mismatch", field="y")
        seq = EncodedSequence(seq.deltas, labels, seq.eoc, seq.bow, author=seq.author, text=seq.text)
    return classifier.evaluate([seq]).classification


def accuracy(classifier: Classifier, sequences: Sequence[EncodedSequence]) -> float:
    """Fraction of strokes whose argmax class equals the label."""
    correct, total = 0, 0
    for seq in sequences:
        if len(seq) == 0:
            continue
        correct += int(np.sum(classifier.predict(seq) == seq.y))
        total += len(seq)
    if total == 0:
        raise InkDataError("accuracy needs at least one stroke")
    return correct / total
