"""Finite-difference gradient checks over every primitive and the full models."""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np

from .autodiff import (
    GradCheckReport,
    Graph,
    Node,
    add_n,
    clip,
    concat,
    exp,
    grad_check,
    log,
    log_softmax,
    reduce_mean,
    reduce_sum,
    relu,
    sigmoid,
    softmax,
    softplus,
    square,
    tanh,
    transpose,
)
from .classifier import Classifier
from .cvrnn import CvrnnModel
from .distributions import (
    BernoulliParam,
    BivariateGaussianParams,
    Categorical,
    DiagonalGaussian,
    bernoulli_nll,
    bivariate_nll,
    categorical_kl,
    gaussian_kl,
)
from .models import Alphabet, ClassifierConfig, CvrnnConfig, EncodedSequence
from .nn import LstmParams, LstmState, ParamStore, birnn_forward, init_lstm, unroll

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-3

# builder(graph, rng) -> scalar loss; parameters are registered inside
Builder = Callable[[Graph, np.random.Generator], Node]


@dataclass(frozen=True)
class CheckResult:
    name: str
    report: GradCheckReport

    @property
    def passed(self) -> bool:
        return self.report.passed

    @property
    def max_rel_error(self) -> float:
        return self.report.max_rel_error


def _away_from_zero(rng: np.random.Generator, shape, lo: float = 0.2) -> np.ndarray:
    return rng.uniform(lo, 2.0, size=shape) * rng.choice([-1.0, 1.0], size=shape)


def _weighted(graph: Graph, node: Node, rng: np.random.Generator) -> Node:
    """Contract with random weights so every output entry matters."""
    return reduce_sum(node * graph.constant(rng.uniform(-1.0, 1.0, size=node.shape)))


def _unary(fn, lo: float = -2.0, hi: float = 2.0, shape=(4,)) -> Builder:
    def build(graph: Graph, rng: np.random.Generator) -> Node:
        x = graph.param("x", rng.uniform(lo, hi, size=shape))
        return _weighted(graph, fn(x), rng)
    return build


def _binary(fn, b_lo: float = -2.0) -> Builder:
    def build(graph: Graph, rng: np.random.Generator) -> Node:
        a = graph.param("a", rng.uniform(-2.0, 2.0, size=(4,)))
        b = graph.param("b", rng.uniform(b_lo, 2.0, size=(4,)))
        return _weighted(graph, fn(a, b), rng)
    return build


def _relu(graph: Graph, rng: np.random.Generator) -> Node:
    return _weighted(graph, relu(graph.param("x", _away_from_zero(rng, (4,)))), rng)


def _clip(graph: Graph, rng: np.random.Generator) -> Node:
    # three entries inside the band, two outside, none near the edges at +-1
    x = np.concatenate([rng.uniform(-0.8, 0.8, size=3), [1.5, -1.7]])
    return _weighted(graph, clip(graph.param("x", x), -1.0, 1.0), rng)


def _matmul(graph: Graph, rng: np.random.Generator) -> Node:
    w = graph.param("w", rng.uniform(-2.0, 2.0, size=(3, 4)))
    x = graph.param("x", rng.uniform(-2.0, 2.0, size=(4,)))
    m = graph.param("m", rng.uniform(-2.0, 2.0, size=(4, 2)))
    return _weighted(graph, w @ x, rng) + _weighted(graph, w @ m, rng)


def _concat(graph: Graph, rng: np.random.Generator) -> Node:
    a = graph.param("a", rng.uniform(-2.0, 2.0, size=(2,)))
    b = graph.param("b", rng.uniform(-2.0, 2.0, size=(3,)))
    return _weighted(graph, concat([a, b]), rng)


def _slice(graph: Graph, rng: np.random.Generator) -> Node:
    x = graph.param("x", rng.uniform(-2.0, 2.0, size=(3, 4)))
    # the gather repeats row 2
    gathered = x[np.array([2, 0, 2])]
    return _weighted(graph, x[1], rng) + _weighted(graph, x[0][1:3], rng) + _weighted(graph, gathered, rng)


def _transpose(graph: Graph, rng: np.random.Generator) -> Node:
    w = graph.param("w", rng.uniform(-2.0, 2.0, size=(3, 4)))
    x = graph.param("x", rng.uniform(-2.0, 2.0, size=(2, 4)))
    return _weighted(graph, x @ transpose(w), rng)


def _gaussian_kl(graph: Graph, rng: np.random.Generator) -> Node:
    raw_q = graph.param("q", rng.uniform(-1.0, 1.0, size=(6,)))
    raw_p = graph.param("p", rng.uniform(-1.0, 1.0, size=(6,)))
    return gaussian_kl(DiagonalGaussian.from_raw(raw_q, 3), DiagonalGaussian.from_raw(raw_p, 3))


def _categorical_kl(graph: Graph, rng: np.random.Generator) -> Node:
    q = Categorical.from_logits(graph.param("q", rng.uniform(-2.0, 2.0, size=(4,))))
    p = Categorical.from_logits(graph.param("p", rng.uniform(-2.0, 2.0, size=(4,))))
    return categorical_kl(q, p)


def _bivariate_nll(graph: Graph, rng: np.random.Generator) -> Node:
    raw = graph.param("raw", rng.uniform(-1.0, 1.0, size=(5,)))
    return bivariate_nll(BivariateGaussianParams.from_raw(raw), rng.uniform(-1.0, 1.0, size=2))


def _bernoulli_nll(graph: Graph, rng: np.random.Generator) -> Node:
    logit = graph.param("logit", rng.uniform(-2.0, 2.0, size=()))
    b = BernoulliParam.from_logit(logit)
    return bernoulli_nll(b, 1) + bernoulli_nll(b, 0)


def _birnn_padded(graph: Graph, rng: np.random.Generator) -> Node:
    store = ParamStore()
    init_lstm(store, "f", 3, 4, rng)
    init_lstm(store, "b", 3, 4, rng)
    nodes = graph.bind(store)
    xs = [graph.constant(rng.uniform(-1.0, 1.0, size=(2, 3))) for _ in range(4)]
    outs = birnn_forward(xs, LstmParams.bind(nodes, "f"), LstmParams.bind(nodes, "b"), lengths=[4, 2])
    return add_n(_weighted(graph, o, rng) for o in outs)


def _lstm(graph: Graph, rng: np.random.Generator) -> Node:
    store = ParamStore()
    init_lstm(store, "lstm", 3, 4, rng)
    params = LstmParams.bind(graph.bind(store), "lstm")
    xs = [graph.constant(rng.uniform(-1.0, 1.0, size=3)) for _ in range(3)]
    states = unroll(xs, LstmState.zeros(graph, 4), params)
    return _weighted(graph, concat([s.h for s in states]), rng)


PRIMITIVES: Dict[str, Builder] = {
    "add": _binary(lambda a, b: a + b),
    "sub": _binary(lambda a, b: a - b),
    "mul": _binary(lambda a, b: a * b),
    "div": _binary(lambda a, b: a / b, b_lo=0.5),
    "neg": _unary(lambda x: -x),
    "matmul": _matmul,
    "transpose": _transpose,
    "tanh": _unary(tanh),
    "sigmoid": _unary(sigmoid),
    "exp": _unary(exp),
    "log": _unary(log, lo=0.5),
    "softplus": _unary(softplus),
    "relu": _relu,
    "square": _unary(square),
    "softmax": _unary(softmax),
    "log_softmax": _unary(log_softmax),
    "concat": _concat,
    "slice": _slice,
    "sum": _unary(reduce_sum),
    "mean": _unary(reduce_mean, shape=(2, 3)),
    "clip": _clip,
}

COMPOSITES: Dict[str, Builder] = {
    "gaussian_kl": _gaussian_kl,
    "categorical_kl": _categorical_kl,
    "bivariate_nll": _bivariate_nll,
    "bernoulli_nll": _bernoulli_nll,
    "lstm": _lstm,
    "birnn_padded": _birnn_padded,
}


def toy_sequence(rng: np.random.Generator, length: int, alphabet_size: int) -> EncodedSequence:
    """Random model-space sequence with a character boundary every other step."""
    deltas = rng.normal(size=(length, 3))
    deltas[0, :2] = 0.0
    deltas[:, 2] = (np.arange(length) % 2 == 1).astype(float)
    y = rng.integers(0, alphabet_size, size=length)
    eoc = (np.arange(length) % 2 == 1).astype(int)
    bow = np.zeros(length, dtype=int)
    bow[0] = 1
    return EncodedSequence(deltas, y, eoc, bow)


def cvrnn_loss_graph(seed: int = 0, length: int = 4, hidden: int = 8, alphabet_size: int = 3,
                     latent: int = 4) -> Tuple[Graph, Node]:
    """Full training loss of a small C-VRNN on one random sequence."""
    rng = np.random.default_rng(seed)
    config = CvrnnConfig(alphabet_size=alphabet_size, hidden_size=hidden, latent_size=latent, gmm_size=latent,
                         ff_size=hidden, precision="float64")
    model = CvrnnModel(config, Alphabet("abcdefghij"[:alphabet_size]), seed=seed)
    graph, _, total = model.loss_graph(toy_sequence(rng, length, alphabet_size), rng)
    return graph, total


def classifier_loss_graph(seed: int = 0, length: int = 4, hidden: int = 4,
                          alphabet_size: int = 3) -> Tuple[Graph, Node]:
    """A small classifier and its mean cross-entropy on one random sequence."""
    rng = np.random.default_rng(seed)
    config = ClassifierConfig(alphabet_size=alphabet_size, hidden_size=hidden, projection_size=hidden,
                              num_layers=2, precision="float64")
    model = Classifier(config, Alphabet("abcdefghij"[:alphabet_size]), seed=seed)
    graph, _, total = model.loss_graph(toy_sequence(rng, length, alphabet_size), rng)
    return graph, total


def run_gradcheck_suite(seed: int = 0, tol: float = DEFAULT_TOL, model_entries: int = 50) -> List[CheckResult]:
    """Check every primitive and composite, then sampled entries of both model losses."""
    results = []
    for i, (name, build) in enumerate({**PRIMITIVES, **COMPOSITES}.items()):
        graph = Graph("float64")
        loss = build(graph, np.random.default_rng([seed, i]))
        results.append(CheckResult(name, grad_check(graph, loss, tol=tol)))
    for name, make in (("cvrnn", cvrnn_loss_graph), ("classifier", classifier_loss_graph)):
        graph, loss = make(seed)
        results.append(CheckResult(name, grad_check(graph, loss, tol=tol, max_entries=model_entries, seed=seed)))
    failed = [r.name for r in results if not r.passed]
    if failed:
        logger.warning(f"Gradient check failed for: {', '.join(failed)}")
    else:
        logger.info(f"Gradient check passed for {len(results)} checks")
    return results
