"""Per-step functions of the conditional variational RNN.

Subnetworks:
    inp     tau^inp      LSTM over strokes x_t
    latent  tau^latent   LSTM over concat(h^inp_t, z_t, phi_t)
    q_z     g^{q,z}      posterior style latent from (h^inp_t, h^latent_{t-1})
    p_z     g^{p,z}      prior style latent from h^latent_{t-1}
    q_pi    g^{q,pi}     posterior content weights from (h^inp_t, h^latent_{t-1})
    p_pi    g^{p,pi}     prior content weights from h^latent_{t-1}
    out     g^out        stroke, pen and eoc distributions from (z_t, phi_t, bow_t)
    gmm                  one Gaussian per alphabet symbol
"""

from dataclasses import dataclass
from typing import Mapping, Optional, Tuple

import numpy as np

from ..autodiff import Graph, Node, concat
from ..distributions import (
    BernoulliParam,
    BivariateGaussianParams,
    Categorical,
    DiagonalGaussian,
    GmmLatentSpace,
    gmm_sample,
)
from ..models import CvrnnConfig
from ..nn import (
    FeedForwardParams,
    LstmParams,
    LstmState,
    ParamStore,
    feed_forward,
    init_feed_forward,
    init_lstm,
    lstm_step,
)

COORD_OUTPUTS = 5  # mu (2), scale logits (2), correlation logit (1)
OUT_SIZE = COORD_OUTPUTS + 2  # + pen logit + eoc logit


def init_params(config: CvrnnConfig, rng: np.random.Generator) -> ParamStore:
    """Initialise every network weight for config."""
    H, Dz, Dphi, F, K = config.hidden_size, config.latent_size, config.gmm_size, config.ff_size, config.alphabet_size
    store = ParamStore()
    init_lstm(store, "inp", config.input_size, H, rng)
    init_lstm(store, "latent", H + Dz + Dphi, H, rng)
    init_feed_forward(store, "q_z", 2 * H, F, 2 * Dz, rng)
    init_feed_forward(store, "p_z", H, F, 2 * Dz, rng)
    init_feed_forward(store, "q_pi", 2 * H, F, K, rng)
    init_feed_forward(store, "p_pi", H, F, K, rng)
    init_feed_forward(store, "out", Dz + Dphi + 1, F, OUT_SIZE, rng)
    # components start at U(-1, 1) means with unit scale
    store.add("gmm.mu", rng.uniform(-1.0, 1.0, size=(K, Dphi)))
    store.add("gmm.log_sigma", np.zeros((K, Dphi)))
    return store


@dataclass(frozen=True)
class CvrnnParams:
    inp: LstmParams
    latent: LstmParams
    q_z: FeedForwardParams
    p_z: FeedForwardParams
    q_pi: FeedForwardParams
    p_pi: FeedForwardParams
    out: FeedForwardParams
    gmm: GmmLatentSpace

    @property
    def latent_size(self) -> int:
        return self.q_z.output_size // 2

    @classmethod
    def bind(cls, nodes: Mapping[str, Node]) -> "CvrnnParams":
        return cls(
            inp=LstmParams.bind(nodes, "inp"),
            latent=LstmParams.bind(nodes, "latent"),
            q_z=FeedForwardParams.bind(nodes, "q_z"),
            p_z=FeedForwardParams.bind(nodes, "p_z"),
            q_pi=FeedForwardParams.bind(nodes, "q_pi"),
            p_pi=FeedForwardParams.bind(nodes, "p_pi"),
            out=FeedForwardParams.bind(nodes, "out"),
            gmm=GmmLatentSpace(nodes["gmm.mu"], nodes["gmm.log_sigma"]),
        )


@dataclass(frozen=True)
class RecurrentState:
    """Plain-array copy of a CvrnnState, carried between graphs."""

    inp_h: np.ndarray
    inp_c: np.ndarray
    latent_h: np.ndarray
    latent_c: np.ndarray

    @classmethod
    def zeros(cls, hidden_size: int) -> "RecurrentState":
        z = np.zeros(hidden_size)
        return cls(z, z.copy(), z.copy(), z.copy())

    def with_zero_input(self) -> "RecurrentState":
        """Keep the latent cell, reset the input cell."""
        return RecurrentState(np.zeros_like(self.inp_h), np.zeros_like(self.inp_c), self.latent_h, self.latent_c)


@dataclass(frozen=True)
class CvrnnState:
    inp: LstmState
    latent: LstmState

    @classmethod
    def zeros(cls, graph: Graph, hidden_size: int, batch_size: Optional[int] = None) -> "CvrnnState":
        return cls(LstmState.zeros(graph, hidden_size, batch_size), LstmState.zeros(graph, hidden_size, batch_size))

    @classmethod
    def from_arrays(cls, graph: Graph, state: RecurrentState) -> "CvrnnState":
        return cls(LstmState.from_arrays(graph, state.inp_h, state.inp_c),
                   LstmState.from_arrays(graph, state.latent_h, state.latent_c))

    def to_arrays(self) -> RecurrentState:
        return RecurrentState(
            self.inp.h.value.astype(np.float64), self.inp.c.value.astype(np.float64),
            self.latent.h.value.astype(np.float64), self.latent.c.value.astype(np.float64),
        )


@dataclass(frozen=True)
class StepOutput:
    coords: BivariateGaussianParams
    pen: BernoulliParam
    eoc: BernoulliParam


def posterior_step(x: Node, state: CvrnnState, params: CvrnnParams) -> Tuple[LstmState, DiagonalGaussian, Categorical]:
    """h^inp_t = tau^inp(x_t, h^inp_{t-1}); q(z_t) and q(pi_t) from (h^inp_t, h^latent_{t-1})."""
    h_inp = lstm_step(x, state.inp, params.inp)
    features = concat([h_inp.h, state.latent.h])
    z_q = DiagonalGaussian.from_raw(feed_forward(features, params.q_z), params.latent_size)
    pi_q = Categorical.from_logits(feed_forward(features, params.q_pi))
    return h_inp, z_q, pi_q


def prior_step(state: CvrnnState, params: CvrnnParams) -> Tuple[DiagonalGaussian, Categorical]:
    """p(z_t) and p(pi_t) from h^latent_{t-1} alone."""
    h = state.latent.h
    z_p = DiagonalGaussian.from_raw(feed_forward(h, params.p_z), params.latent_size)
    pi_p = Categorical.from_logits(feed_forward(h, params.p_pi))
    return z_p, pi_p


def decode_step(z: Node, phi: Node, bow, params: CvrnnParams) -> StepOutput:
    """g^out(z_t, phi_t, bow_t); no recurrent state enters the decoder.

    For a batch, z and phi are rows and bow holds one flag per row.
    """
    bow_col = np.asarray(bow, dtype=np.float64).reshape(z.shape[:-1] + (1,))
    raw = feed_forward(concat([z, phi, z.graph.constant(bow_col)]), params.out)
    return StepOutput(
        coords=BivariateGaussianParams.from_raw(raw[..., 0:COORD_OUTPUTS]),
        pen=BernoulliParam.from_logit(raw[..., COORD_OUTPUTS]),
        eoc=BernoulliParam.from_logit(raw[..., COORD_OUTPUTS + 1]),
    )


def latent_update(h_inp: LstmState, z: Node, phi: Node, state: CvrnnState, params: CvrnnParams) -> CvrnnState:
    """h^latent_t = tau^latent(concat(h^inp_t, z_t, phi_t), h^latent_{t-1})."""
    latent = lstm_step(concat([h_inp.h, z, phi]), state.latent, params.latent)
    return CvrnnState(h_inp, latent)


def content_code(params: CvrnnParams, k: int, eps: Optional[np.ndarray]) -> Node:
    """phi for symbol k: the component mean when eps is None, else a reparameterized draw."""
    if eps is None:
        return params.gmm.component(k).mu
    return gmm_sample(params.gmm, k, eps)
