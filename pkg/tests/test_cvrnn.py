import math

import numpy as np
import pytest

from src.autodiff import reduce_sum
from src.cvrnn import (
    CvrnnModel,
    CvrnnParams,
    CvrnnState,
    decode_step,
    init_params,
    latent_update,
    posterior_step,
    prior_step,
)
from src.diagnostics import toy_sequence
from src.errors import ContractError, InkDataError
from src.models import Alphabet, CvrnnConfig, EncodedSequence
from src.nn import LstmState


def _zeroed(model):
    return model.with_params(model.params.replace(model.params.zeros_like()))


def _bound(model):
    graph = model.new_graph()
    return graph, CvrnnParams.bind(graph.bind(model.params))


class TestParameters:
    def test_shapes_follow_config(self, small_cvrnn):
        shapes = small_cvrnn.params.shapes()
        assert shapes["inp.w_x"] == (32, 3)
        assert shapes["latent.w_x"] == (32, 8 + 4 + 4)
        assert shapes["q_z.hidden.w"] == (8, 16)
        assert shapes["q_z.out.w"] == (8, 8)
        assert shapes["p_pi.out.w"] == (3, 8)
        assert shapes["out.hidden.w"] == (8, 4 + 4 + 1)
        assert shapes["out.out.w"] == (7, 8)
        assert shapes["gmm.mu"] == (3, 4)

    def test_gmm_means_in_unit_box(self, small_cvrnn):
        mu = small_cvrnn.params["gmm.mu"]
        assert np.all(np.abs(mu) <= 1.0)
        np.testing.assert_array_equal(small_cvrnn.params["gmm.log_sigma"], np.zeros((3, 4)))

    def test_same_seed_same_params(self, small_cvrnn, abc):
        again = CvrnnModel(small_cvrnn.config, abc, seed=3)
        for name in small_cvrnn.params:
            np.testing.assert_array_equal(again.params[name], small_cvrnn.params[name])

    def test_alphabet_must_match_config(self, small_cvrnn):
        with pytest.raises(ContractError):
            CvrnnModel(small_cvrnn.config, Alphabet("ab"))

    def test_mismatched_params_rejected(self, small_cvrnn, abc):
        other = init_params(CvrnnConfig(alphabet_size=3, hidden_size=6), np.random.default_rng(0))
        with pytest.raises(InkDataError):
            CvrnnModel(small_cvrnn.config, abc, params=other)


class TestZeroParameters:
    def test_uniform_content_and_floor_scale(self, small_cvrnn):
        model = _zeroed(small_cvrnn)
        graph, params = _bound(model)
        state = CvrnnState.zeros(graph, 8)
        _, z_q, pi_q = posterior_step(graph.constant([0.5, -0.5, 0.0]), state, params)
        z_p, pi_p = prior_step(state, params)
        np.testing.assert_allclose(pi_q.probs.value, np.full(3, 1 / 3))
        np.testing.assert_allclose(pi_p.probs.value, np.full(3, 1 / 3))
        np.testing.assert_allclose(z_q.sigma.value, np.full(4, math.log(2.0) + 1e-4))
        np.testing.assert_array_equal(z_p.mu.value, np.zeros(4))

    def test_loss_terms(self, small_cvrnn, rng):
        model = _zeroed(small_cvrnn)
        seq = toy_sequence(rng, 5, 3)
        loss = model.evaluate([seq])
        assert loss.kl_z == pytest.approx(0.0, abs=1e-12)
        assert loss.kl_pi == pytest.approx(0.0, abs=1e-12)
        assert loss.classification == pytest.approx(5 * math.log(3.0))
        assert loss.eoc_nll == pytest.approx(5 * math.log(2.0))


class TestDecoder:
    def test_emission_ignores_latent_state(self, small_cvrnn, rng):
        graph, params = _bound(small_cvrnn)
        H = small_cvrnn.config.hidden_size
        z, phi, x = (graph.constant(rng.normal(size=n)) for n in (4, 4, 3))
        inp = LstmState.zeros(graph, H)
        emissions, prior_means = [], []
        for name in ("calm", "shaken"):
            scale = 0.0 if name == "calm" else 3.0
            h = graph.param(f"{name}.h", scale * rng.normal(size=H))
            state = CvrnnState(inp, LstmState(h, graph.constant(scale * rng.normal(size=H))))
            z_p, _ = prior_step(state, params)
            h_inp, _, _ = posterior_step(x, state, params)
            out = decode_step(z, phi, 1, params)
            latent_update(h_inp, z, phi, state, params)
            emission = [out.coords.mu, out.coords.sigma, out.coords.rho, out.pen.p, out.eoc.p]
            emissions.append(b"".join(node.value.tobytes() for node in emission))
            prior_means.append(z_p.mu.value)
            scalar = reduce_sum(emission[0]) + reduce_sum(emission[1]) + emission[2] + emission[3] + emission[4]
            assert not np.any(graph.backward(scalar)[f"{name}.h"])
        assert emissions[0] == emissions[1]
        assert not np.array_equal(prior_means[0], prior_means[1])

    def test_bow_flag_changes_output(self, small_cvrnn, rng):
        graph, params = _bound(small_cvrnn)
        z, phi = graph.constant(rng.normal(size=4)), graph.constant(rng.normal(size=4))
        start = decode_step(z, phi, 1, params)
        inner = decode_step(z, phi, 0, params)
        assert not np.array_equal(start.coords.mu.value, inner.coords.mu.value)

    def test_outputs_are_valid_distributions(self, small_cvrnn, rng):
        graph, params = _bound(small_cvrnn)
        out = decode_step(graph.constant(rng.normal(size=4) * 10), graph.constant(rng.normal(size=4) * 10), 0,
                          params)
        assert np.all(out.coords.sigma.value >= 1e-4)
        assert abs(float(out.coords.rho)) < 1.0
        assert 0.0 < out.eoc.probability < 1.0


class TestObjective:
    def test_kl_terms_are_non_negative(self, small_cvrnn, tiny_sequences):
        loss = small_cvrnn.evaluate(tiny_sequences)
        assert loss.kl_z >= 0.0
        assert loss.kl_pi >= 0.0
        assert np.isfinite(loss.recon_nll)

    def test_total_uses_kl_weight(self, small_cvrnn, tiny_sequences):
        loss = small_cvrnn.evaluate(tiny_sequences[:2], kl_weight=0.0, seed=1)
        assert loss.total == pytest.approx(loss.recon_nll + loss.classification + loss.eoc_nll)
        weighted = small_cvrnn.evaluate(tiny_sequences[:2], kl_weight=0.5, seed=1)
        assert weighted.total == pytest.approx(
            weighted.recon_nll + 0.5 * (weighted.kl_z + weighted.kl_pi) + weighted.classification + weighted.eoc_nll
        )

    def test_unselected_components_get_no_gradient(self, small_cvrnn, rng):
        seq = toy_sequence(rng, 4, 3)
        seq = EncodedSequence(seq.deltas, [0, 0, 2, 2], seq.eoc, seq.bow)
        _, grads = small_cvrnn.training_step([seq])
        np.testing.assert_array_equal(grads["gmm.mu"][1], np.zeros(4))
        np.testing.assert_array_equal(grads["gmm.log_sigma"][1], np.zeros(4))
        assert np.any(grads["gmm.mu"][0] != 0)
        assert np.any(grads["gmm.mu"][2] != 0)

    def test_every_parameter_receives_gradient(self, small_cvrnn, tiny_sequences):
        _, grads = small_cvrnn.training_step(tiny_sequences[:2])
        silent = [name for name, g in grads.items() if name != "gmm.mu" and name != "gmm.log_sigma"
                  and not np.any(g != 0)]
        assert silent == []

    def test_padded_batch_equals_sum_of_sequences(self, small_cvrnn, tiny_sequences):
        a, b = tiny_sequences[0], tiny_sequences[-1]
        graph, terms, total = small_cvrnn.batch_graph([a, b], [np.random.default_rng(1), np.random.default_rng(2)])
        graph_a, terms_a, total_a = small_cvrnn.loss_graph(a, np.random.default_rng(1))
        graph_b, terms_b, total_b = small_cvrnn.loss_graph(b, np.random.default_rng(2))
        for name, node in terms.items():
            expected = float(terms_a[name]) + float(terms_b[name])
            assert float(node) == pytest.approx(expected, rel=1e-9, abs=1e-12)
        grads, grads_a, grads_b = graph.backward(total), graph_a.backward(total_a), graph_b.backward(total_b)
        for name in grads:
            np.testing.assert_allclose(grads[name], grads_a[name] + grads_b[name], rtol=1e-8, atol=1e-12)

    def test_same_seed_same_gradients(self, small_cvrnn, tiny_sequences):
        batch = tiny_sequences[:3]
        a_loss, a = small_cvrnn.training_step(batch, seed=9, step=4)
        b_loss, b = small_cvrnn.training_step(batch, seed=9, step=4, threads=3)
        assert a_loss.total == b_loss.total
        for name in a:
            assert a[name].tobytes() == b[name].tobytes()

    def test_noise_depends_on_step(self, small_cvrnn, tiny_sequences):
        first = small_cvrnn.evaluate(tiny_sequences[:1], seed=9, step=0)
        second = small_cvrnn.evaluate(tiny_sequences[:1], seed=9, step=1)
        assert first.recon_nll != second.recon_nll

    def test_label_outside_alphabet(self, small_cvrnn, rng):
        seq = toy_sequence(rng, 3, 3)
        bad = EncodedSequence(seq.deltas, [0, 1, 3], seq.eoc, seq.bow)
        with pytest.raises(InkDataError):
            small_cvrnn.evaluate([bad])

    def test_empty_batch(self, small_cvrnn):
        with pytest.raises(ContractError):
            small_cvrnn.evaluate([])

    def test_gradients_match_finite_differences(self):
        from src.autodiff import grad_check
        from src.diagnostics import cvrnn_loss_graph

        graph, loss = cvrnn_loss_graph(seed=2, length=3)
        assert grad_check(graph, loss, tol=1e-4, max_entries=60, seed=2).passed


def test_float32_precision_runs(abc, rng):
    config = CvrnnConfig(alphabet_size=3, hidden_size=4, latent_size=2, gmm_size=2, ff_size=4, precision="float32")
    model = CvrnnModel(config, abc, seed=0)
    loss = model.evaluate([toy_sequence(rng, 3, 3)])
    assert np.isfinite(loss.total)
    assert model.new_graph().dtype == np.float32
