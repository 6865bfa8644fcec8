"""Distributions of the latent and output layers.

All parameters are graph nodes so losses built from them are differentiable.
Samplers that only serve synthesis (bivariate_sample) work on plain values.
"""

import math
from dataclasses import dataclass

import numpy as np

from .autodiff import Graph, Node, clip, exp, log, log_softmax, reduce_sum, sigmoid, softmax, softplus, square, tanh
from .errors import ContractError

SIGMA_FLOOR = 1e-4
RHO_LIMIT = 1.0 - 1e-5
BERNOULLI_CLAMP = 1e-6
CATEGORICAL_CLAMP = 1e-10
LOG_2PI = math.log(2.0 * math.pi)


def positive_scale(raw: Node) -> Node:
    """sigma = softplus(raw) + 1e-4."""
    return softplus(raw) + SIGMA_FLOOR


@dataclass(frozen=True)
class DiagonalGaussian:
    """Diagonal Gaussian over the last axis; a leading axis indexes a batch."""

    mu: Node
    sigma: Node

    def __post_init__(self):
        if self.mu.shape != self.sigma.shape or self.mu.value.ndim not in (1, 2) or self.mu.shape[-1] < 1:
            raise ContractError(f"gaussian needs matching D-vectors, got {self.mu.shape} and {self.sigma.shape}")
        if not np.all(self.sigma.value > 0):
            raise ContractError("gaussian sigma must be strictly positive")

    @property
    def dim(self) -> int:
        return self.mu.shape[-1]

    @classmethod
    def from_raw(cls, raw: Node, dim: int) -> "DiagonalGaussian":
        """Split a 2D-vector into mu and a softplus-parameterized sigma."""
        return cls(raw[..., 0:dim], positive_scale(raw[..., dim:2 * dim]))

    @classmethod
    def from_values(cls, graph: Graph, mu, sigma) -> "DiagonalGaussian":
        return cls(graph.constant(np.atleast_1d(mu)), graph.constant(np.atleast_1d(sigma)))


@dataclass(frozen=True)
class Categorical:
    probs: Node
    log_probs: Node

    def __post_init__(self):
        p = self.probs.value
        tol = 1e-9 if p.dtype == np.float64 else 1e-5
        if p.ndim not in (1, 2) or np.any(p < 0) or np.any(np.abs(np.sum(p, axis=-1) - 1.0) > tol):
            raise ContractError("categorical probs must be non-negative and sum to 1 along the last axis")

    @property
    def size(self) -> int:
        return self.probs.shape[-1]

    @classmethod
    def from_logits(cls, logits: Node) -> "Categorical":
        return cls(softmax(logits), log_softmax(logits))

    @classmethod
    def from_probs(cls, probs: Node) -> "Categorical":
        return cls(probs, log(clip(probs, CATEGORICAL_CLAMP, 1.0)))

    def cross_entropy(self, label) -> Node:
        """-log q(label); a batch takes one label per row."""
        if np.ndim(label) == 0:
            label = int(label)
            if not 0 <= label < self.size:
                raise ContractError(f"label {label} out of range for {self.size} classes")
            return -self.log_probs[..., label]
        labels = np.asarray(label, dtype=np.int64)
        if labels.shape != self.probs.shape[:-1]:
            raise ContractError(f"{labels.shape} labels for probabilities of shape {self.probs.shape}")
        if np.any(labels < 0) or np.any(labels >= self.size):
            raise ContractError(f"labels out of range for {self.size} classes")
        return -self.log_probs[np.arange(len(labels)), labels]


@dataclass(frozen=True)
class GmmLatentSpace:
    """One isotropic Gaussian per alphabet symbol."""

    mu: Node
    log_sigma: Node

    def __post_init__(self):
        if self.mu.shape != self.log_sigma.shape or self.mu.value.ndim != 2:
            raise ContractError(f"gmm needs matching K x D tables, got {self.mu.shape} and {self.log_sigma.shape}")

    @property
    def num_components(self) -> int:
        return self.mu.shape[0]

    @property
    def dim(self) -> int:
        return self.mu.shape[1]

    def component(self, k: int) -> DiagonalGaussian:
        if not 0 <= k < self.num_components:
            raise ContractError(f"gmm component {k} out of range for K={self.num_components}")
        return DiagonalGaussian(self.mu[k], exp(self.log_sigma[k]))

    def components(self, ks) -> DiagonalGaussian:
        """Rows of the selected components, one per batch item."""
        ks = np.asarray(ks, dtype=np.int64).reshape(-1)
        if np.any(ks < 0) or np.any(ks >= self.num_components):
            raise ContractError(f"gmm components {ks.tolist()} out of range for K={self.num_components}")
        return DiagonalGaussian(self.mu[ks], exp(self.log_sigma[ks]))


@dataclass(frozen=True)
class BivariateGaussianParams:
    mu: Node
    sigma: Node
    rho: Node

    def __post_init__(self):
        if self.mu.shape[-1:] != (2,) or self.sigma.shape != self.mu.shape or self.rho.shape != self.mu.shape[:-1]:
            raise ContractError("bivariate gaussian needs 2-vectors mu, sigma and one rho per vector")
        if not np.all(self.sigma.value > 0) or not np.all(np.abs(self.rho.value) < 1.0):
            raise ContractError("bivariate gaussian needs sigma > 0 and |rho| < 1")

    @classmethod
    def from_raw(cls, raw: Node) -> "BivariateGaussianParams":
        """raw is a 5-vector: mu (2), scale logits (2), correlation logit (1)."""
        return cls(raw[..., 0:2], positive_scale(raw[..., 2:4]), tanh(raw[..., 4]) * RHO_LIMIT)


@dataclass(frozen=True)
class BernoulliParam:
    p: Node

    def __post_init__(self):
        if self.p.value.ndim > 1:
            raise ContractError("bernoulli parameter must be a scalar or one value per batch item")

    @classmethod
    def from_logit(cls, logit: Node) -> "BernoulliParam":
        return cls(clip(sigmoid(logit), BERNOULLI_CLAMP, 1.0 - BERNOULLI_CLAMP))

    @classmethod
    def from_probability(cls, graph: Graph, p: float) -> "BernoulliParam":
        return cls(clip(graph.constant(p), BERNOULLI_CLAMP, 1.0 - BERNOULLI_CLAMP))

    @property
    def probability(self) -> float:
        return float(self.p)


def gaussian_kl(q: DiagonalGaussian, p: DiagonalGaussian) -> Node:
    """KL(q || p) for diagonal Gaussians, summed over dimensions."""
    if q.dim != p.dim:
        raise ContractError(f"gaussian_kl dimension mismatch: {q.dim} vs {p.dim}")
    var_q = square(q.sigma)
    var_p = square(p.sigma)
    terms = log(p.sigma) - log(q.sigma) + (var_q + square(q.mu - p.mu)) / (var_p * 2.0) - 0.5
    return reduce_sum(terms, axis=-1)


def categorical_kl(q: Categorical, p: Categorical) -> Node:
    """KL(q || p) = sum q_i log(q_i / p_i), with 0 log 0 = 0."""
    if q.size != p.size:
        raise ContractError(f"categorical_kl dimension mismatch: {q.size} vs {p.size}")
    log_q = log(clip(q.probs, CATEGORICAL_CLAMP, 1.0))
    log_p = log(clip(p.probs, CATEGORICAL_CLAMP, 1.0))
    return reduce_sum(q.probs * (log_q - log_p), axis=-1)


def gaussian_sample(g: DiagonalGaussian, eps) -> Node:
    """Reparameterized draw mu + sigma * eps."""
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape != g.mu.shape:
        raise ContractError(f"noise shape {eps.shape} does not match {g.mu.shape}")
    return g.mu + g.sigma * g.mu.graph.constant(eps)


def gmm_sample(gmm: GmmLatentSpace, k, eps) -> Node:
    """phi = mu_k + sigma_k * eps; gradients reach mu_k and log_sigma_k.

    k is one symbol, or one per batch row.
    """
    component = gmm.component(int(k)) if np.ndim(k) == 0 else gmm.components(k)
    return gaussian_sample(component, eps)


def bivariate_nll(params: BivariateGaussianParams, target) -> Node:
    """Negative log density of the correlated bivariate normal at target."""
    graph = params.mu.graph
    t = target if isinstance(target, Node) else graph.constant(np.asarray(target, dtype=np.float64))
    d = t - params.mu
    s1, s2 = params.sigma[..., 0], params.sigma[..., 1]
    n1 = d[..., 0] / s1
    n2 = d[..., 1] / s2
    one_minus_rho2 = 1.0 - square(params.rho)
    z = square(n1) + square(n2) - n1 * n2 * params.rho * 2.0
    return LOG_2PI + log(s1) + log(s2) + log(one_minus_rho2) * 0.5 + z / (one_minus_rho2 * 2.0)


def bernoulli_nll(b: BernoulliParam, target) -> Node:
    """-[t log p + (1 - t) log(1 - p)]; target is 0/1 or an array of them."""
    if np.ndim(target) == 0:
        if target not in (0, 1):
            raise ContractError(f"bernoulli target must be 0 or 1, got {target}")
        if target == 1:
            return -log(b.p)
        return -log(1.0 - b.p)
    t = np.asarray(target, dtype=np.float64)
    if t.shape != b.p.shape or not np.all((t == 0) | (t == 1)):
        raise ContractError(f"bernoulli targets must be 0/1 with shape {b.p.shape}")
    return -(log(b.p) * t + log(1.0 - b.p) * (1.0 - t))


def bivariate_sample(params: BivariateGaussianParams, eps=None, greedy: bool = False) -> np.ndarray:
    """Draw a 2-vector; greedy returns the mean.

    eps is a standard-normal 2-vector mapped through the Cholesky factor
    [[s1, 0], [rho s2, s2 sqrt(1 - rho^2)]].
    """
    mu = params.mu.value.astype(np.float64)
    if greedy:
        return mu.copy()
    if eps is None:
        raise ContractError("bivariate_sample needs noise unless greedy")
    e1, e2 = np.asarray(eps, dtype=np.float64)
    s1, s2 = params.sigma.value.astype(np.float64)
    rho = float(params.rho)
    return np.array([mu[0] + s1 * e1, mu[1] + s2 * (rho * e1 + math.sqrt(1.0 - rho * rho) * e2)])


def as_categorical(graph: Graph, probs) -> Categorical:
    """Build a Categorical from plain probabilities (tests, priors)."""
    return Categorical.from_probs(graph.constant(np.asarray(probs, dtype=np.float64)))
