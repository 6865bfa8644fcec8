"""Training objective of the conditional variational RNN over ground-truth strokes."""

import logging
from typing import Dict, Mapping, Sequence

import numpy as np

from ..autodiff import Graph, Node, add_n, reduce_sum
from ..distributions import bernoulli_nll, bivariate_nll, categorical_kl, gaussian_kl, gaussian_sample, gmm_sample
from ..models import CvrnnConfig
from ..nn import InkModel, PaddedBatch, ParamStore
from .network import CvrnnParams, CvrnnState, decode_step, init_params, latent_update, posterior_step, prior_step

logger = logging.getLogger(__name__)


class CvrnnModel(InkModel):
    """Style latent z, content latent pi and a GMM content code phi per stroke.

    At each step t:
        priors       p(z_t), p(pi_t) from h^latent_{t-1}
        posteriors   q(z_t), q(pi_t) from (h^inp_t, h^latent_{t-1})
        content      phi_t drawn from the component of the true label y_t
        decoder      x_t and eoc_t from (z_t, phi_t, bow_t)
    """

    kind = "cvrnn"
    config_cls = CvrnnConfig

    def init_params(self, rng: np.random.Generator) -> ParamStore:
        return init_params(self.config, rng)

    def batch_terms(self, graph: Graph, nodes: Mapping[str, Node], batch: PaddedBatch,
                    rngs: Sequence[np.random.Generator]) -> Dict[str, Node]:
        params = CvrnnParams.bind(nodes)
        eps_z, eps_phi = batch.step_noise(rngs, self.config.latent_size, self.config.gmm_size)
        state = CvrnnState.zeros(graph, self.config.hidden_size, batch.size)
        recon, kl_z, kl_pi, classification, eoc = [], [], [], [], []
        for t in range(batch.steps):
            x = graph.constant(batch.deltas[t])
            ks = batch.y[t]
            mask = batch.mask[t]
            z_p, pi_p = prior_step(state, params)
            h_inp, z_q, pi_q = posterior_step(x, state, params)
            z = gaussian_sample(z_q, eps_z[t])
            # selection by the true label is discrete, so nothing flows from phi back into q(pi)
            phi = gmm_sample(params.gmm, ks, eps_phi[t])
            out = decode_step(z, phi, batch.bow[t], params)

            pen = np.rint(batch.deltas[t, :, 2])
            stroke_nll = bivariate_nll(out.coords, batch.deltas[t, :, :2]) + bernoulli_nll(out.pen, pen)
            recon.append(_masked(stroke_nll, mask))
            eoc.append(_masked(bernoulli_nll(out.eoc, batch.eoc[t]), mask))
            classification.append(_masked(pi_q.cross_entropy(ks), mask))
            kl_z.append(_masked(gaussian_kl(z_q, z_p), mask))
            kl_pi.append(_masked(categorical_kl(pi_q, pi_p), mask))
            state = latent_update(h_inp, z, phi, state, params)

        return {
            "recon_nll": add_n(recon),
            "kl_z": add_n(kl_z),
            "kl_pi": add_n(kl_pi),
            "classification": add_n(classification),
            "eoc_nll": add_n(eoc),
        }


def _masked(values: Node, mask: np.ndarray) -> Node:
    """Sum of per-item values over the real (unpadded) rows."""
    return reduce_sum(values * mask)
