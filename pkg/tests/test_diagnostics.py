import numpy as np

from src.diagnostics import COMPOSITES, PRIMITIVES, classifier_loss_graph, run_gradcheck_suite, toy_sequence


def test_suite_covers_every_check():
    results = run_gradcheck_suite(seed=1, model_entries=10)
    names = [r.name for r in results]
    assert names == list(PRIMITIVES) + list(COMPOSITES) + ["cvrnn", "classifier"]
    assert all(r.passed for r in results), [(r.name, r.max_rel_error) for r in results if not r.passed]


def test_toy_sequence_layout(rng):
    seq = toy_sequence(rng, 6, 4)
    assert len(seq) == 6
    np.testing.assert_array_equal(seq.deltas[0, :2], [0.0, 0.0])
    assert list(seq.eoc) == [0, 1, 0, 1, 0, 1]
    assert seq.bow[0] == 1 and seq.bow[1:].sum() == 0
    assert seq.y.max() < 4


def test_model_loss_graphs_are_seeded():
    graph_a, loss_a = classifier_loss_graph(seed=4)
    graph_b, loss_b = classifier_loss_graph(seed=4)
    assert float(loss_a) == float(loss_b)
    assert set(graph_a.params) == set(graph_b.params)
