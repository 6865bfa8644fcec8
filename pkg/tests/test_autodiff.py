import numpy as np
import pytest

from src.autodiff import (
    Graph,
    add_n,
    concat,
    grad_check,
    log,
    reduce_mean,
    reduce_sum,
    relative_error,
    sigmoid,
    softmax,
    softplus,
    stop_gradient,
    tanh,
    transpose,
)
from src.diagnostics import COMPOSITES, PRIMITIVES
from src.errors import ContractError, NumericError, ShapeError


class TestForward:
    def test_matmul_by_hand(self):
        g = Graph()
        out = g.constant([[1.0, 2.0], [3.0, 4.0]]) @ g.constant([[1.0], [1.0]])
        np.testing.assert_array_equal(out.value, [[3.0], [7.0]])

    def test_sigmoid_and_tanh_at_zero(self):
        g = Graph()
        x = g.constant(0.0)
        assert float(sigmoid(x)) == 0.5
        assert float(tanh(x)) == 0.0

    def test_softmax_of_zeros_is_uniform(self):
        g = Graph()
        np.testing.assert_allclose(softmax(g.constant(np.zeros(3))).value, np.full(3, 1 / 3))

    def test_softplus_does_not_overflow(self):
        g = Graph()
        out = softplus(g.constant([-800.0, 0.0, 800.0]))
        np.testing.assert_allclose(out.value, [0.0, np.log(2.0), 800.0])

    def test_shape_mismatch_names_node_and_op(self):
        g = Graph()
        a = g.constant(np.ones(3))
        b = g.constant(np.ones(4))
        with pytest.raises(ShapeError) as err:
            a + b
        assert f"node {len(g)}" in str(err.value)
        assert "(add)" in str(err.value)

    def test_non_finite_output_carries_node_id(self):
        g = Graph()
        x = g.constant(0.0)
        with pytest.raises(NumericError) as err:
            log(x)
        assert err.value.node_id == 1

    def test_duplicate_parameter_is_a_contract_error(self):
        g = Graph()
        g.param("w", np.ones(2))
        with pytest.raises(ContractError):
            g.param("w", np.ones(2))

    def test_forward_replay_is_pure(self):
        g = Graph()
        w = g.param("w", np.array([0.3, -0.2]))
        g.output("y", reduce_sum(tanh(w * 3.0)))
        first = g.forward({"w": np.array([1.0, 2.0])})
        second = g.forward({"w": np.array([1.0, 2.0])})
        assert first["y"].tobytes() == second["y"].tobytes()
        np.testing.assert_allclose(first["y"], np.tanh(3.0) + np.tanh(6.0))

    def test_forward_rejects_rebinding_with_wrong_shape(self):
        g = Graph()
        g.param("w", np.ones(2))
        with pytest.raises(ShapeError):
            g.forward({"w": np.ones(3)})


class TestBackward:
    def test_square_derivative(self):
        g = Graph()
        x = g.param("x", 3.0)
        assert float(g.backward(x * x)["x"]) == pytest.approx(6.0)

    def test_sigmoid_derivative_at_zero(self):
        g = Graph()
        x = g.param("x", 0.0)
        assert float(g.backward(sigmoid(x))["x"]) == pytest.approx(0.25)

    def test_sum_of_matmul_gradient_is_outer_product(self, rng):
        g = Graph()
        w = g.param("w", rng.normal(size=(3, 4)))
        x = rng.normal(size=4)
        loss = reduce_sum(w @ g.constant(x))
        np.testing.assert_allclose(g.backward(loss)["w"], np.outer(np.ones(3), x))
        assert grad_check(g, loss).passed

    def test_non_scalar_output_is_rejected(self):
        g = Graph()
        w = g.param("w", np.ones(3))
        with pytest.raises(ContractError):
            g.backward(w * 2.0)

    def test_unused_parameters_get_zero_gradients(self):
        g = Graph()
        a = g.param("a", np.ones(2))
        g.param("unused", np.ones((2, 2)))
        grads = g.backward(reduce_sum(a))
        np.testing.assert_array_equal(grads["unused"], np.zeros((2, 2)))

    def test_stop_gradient_blocks_flow(self):
        g = Graph()
        a = g.param("a", 2.0)
        grads = g.backward(stop_gradient(a) * a)
        assert float(grads["a"]) == pytest.approx(2.0)

    def test_gradients_are_linear(self, rng):
        g = Graph()
        w = g.param("w", rng.normal(size=4))
        f1 = reduce_sum(tanh(w))
        f2 = reduce_mean(w * w)
        both = g.backward(f1 + f2)
        separate = {k: g.backward(f1)[k] + g.backward(f2)[k] for k in both}
        np.testing.assert_allclose(both["w"], separate["w"], rtol=1e-12)

    def test_concat_and_slice_route_gradients(self):
        g = Graph()
        a = g.param("a", np.array([1.0, 2.0]))
        b = g.param("b", np.array([3.0]))
        joined = concat([a, b])
        grads = g.backward(joined[1] * 2.0 + joined[2])
        np.testing.assert_array_equal(grads["a"], [0.0, 2.0])
        np.testing.assert_array_equal(grads["b"], [1.0])

    def test_add_n_sums_nodes(self):
        g = Graph()
        nodes = [g.constant(float(i)) for i in range(4)]
        assert float(add_n(nodes)) == 6.0
        with pytest.raises(ContractError):
            add_n([])

    def test_bias_gradient_sums_over_batch_rows(self, rng):
        g = Graph()
        bias, x = rng.normal(size=3), rng.normal(size=(4, 3))
        b = g.param("b", bias)
        loss = reduce_sum(tanh(g.constant(x) + b))
        expected = np.sum(1.0 - np.tanh(x + bias) ** 2, axis=0)
        np.testing.assert_allclose(g.backward(loss)["b"], expected, rtol=1e-12)
        assert grad_check(g, loss).passed

    def test_softmax_normalises_each_row(self, rng):
        g = Graph()
        logits = rng.normal(size=(3, 4))
        batch = softmax(g.constant(logits)).value
        np.testing.assert_allclose(batch.sum(axis=1), np.ones(3))
        for row, expected in zip(logits, batch):
            np.testing.assert_allclose(softmax(g.constant(row)).value, expected, rtol=1e-14)

    def test_repeated_gather_accumulates(self):
        g = Graph()
        x = g.param("x", np.arange(6.0).reshape(3, 2))
        picked = x[np.array([2, 0, 2])]
        np.testing.assert_array_equal(picked.value, [[4.0, 5.0], [0.0, 1.0], [4.0, 5.0]])
        np.testing.assert_array_equal(g.backward(reduce_sum(picked))["x"], [[1.0, 1.0], [0.0, 0.0], [2.0, 2.0]])

    def test_reduce_sum_along_axis(self, rng):
        g = Graph()
        x = g.param("x", rng.normal(size=(2, 3)))
        rows = reduce_sum(x, axis=-1)
        assert rows.shape == (2,)
        grads = g.backward(reduce_sum(rows * g.constant([1.0, -2.0])))
        np.testing.assert_array_equal(grads["x"], [[1.0] * 3, [-2.0] * 3])

    def test_transpose_routes_gradient_back(self, rng):
        g = Graph()
        w = g.param("w", rng.normal(size=(2, 3)))
        x = rng.normal(size=(4, 2))
        loss = reduce_sum(g.constant(x) @ w)
        np.testing.assert_array_equal(transpose(w).value, w.value.T)
        np.testing.assert_allclose(g.backward(reduce_sum(transpose(w) * 3.0))["w"], np.full((2, 3), 3.0))
        assert grad_check(g, loss).passed


class TestGradCheck:
    def test_single_sigmoid_is_very_accurate(self):
        g = Graph()
        x = g.param("x", np.array([0.7]))
        report = grad_check(g, reduce_sum(sigmoid(x)), h=1e-5)
        assert report.max_rel_error < 1e-6

    def test_zero_parameter_graph_passes_vacuously(self):
        g = Graph()
        report = grad_check(g, reduce_sum(g.constant(np.ones(2))))
        assert report.entries == []
        assert report.passed

    def test_restores_parameter_values(self, rng):
        g = Graph()
        value = rng.normal(size=3)
        w = g.param("w", value)
        loss = reduce_sum(tanh(w))
        grad_check(g, loss)
        np.testing.assert_array_equal(w.value, value)
        assert float(loss) == pytest.approx(float(np.sum(np.tanh(value))))

    def test_relative_error_uses_unit_floor(self):
        assert relative_error(1e-3, 2e-3) == pytest.approx(1e-3)
        assert relative_error(10.0, 11.0) == pytest.approx(1 / 11)

    @pytest.mark.parametrize("name", sorted(PRIMITIVES))
    def test_every_primitive_within_tolerance(self, name):
        g = Graph()
        loss = PRIMITIVES[name](g, np.random.default_rng(7))
        assert grad_check(g, loss, tol=1e-4).passed

    @pytest.mark.parametrize("name", sorted(COMPOSITES))
    def test_distribution_and_lstm_losses_within_tolerance(self, name):
        g = Graph()
        loss = COMPOSITES[name](g, np.random.default_rng(8))
        assert grad_check(g, loss, tol=1e-4).passed
