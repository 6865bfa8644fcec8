import numpy as np
import pytest

from src.cvrnn import RecurrentState, infer_style, reconstruct, restyle, sample_text
from src.diagnostics import toy_sequence
from src.errors import InkDataError
from src.models import EncodedSequence, SamplingConfig


def _with_eoc_bias(model, bias):
    """Silence the eoc logit's inputs so its probability is sigmoid(bias)."""
    w = model.params["out.out.w"].copy()
    b = model.params["out.out.b"].copy()
    w[6] = 0.0
    b[6] = bias
    return model.with_params(model.params.replace({"out.out.w": w, "out.out.b": b}))


class TestSampleText:
    def test_certain_eoc_writes_one_stroke_per_character(self, small_cvrnn):
        model = _with_eoc_bias(small_cvrnn, 20.0)
        result = sample_text(model, "abc", cfg=SamplingConfig(seed=1))
        assert len(result) == 3
        assert not result.partial
        assert list(result.sequence.y) == [0, 1, 2]
        assert list(result.sequence.eoc) == [1, 1, 1]

    def test_silent_eoc_hits_the_cap(self, small_cvrnn):
        model = _with_eoc_bias(small_cvrnn, -20.0)
        result = sample_text(model, "ab", cfg=SamplingConfig(max_strokes_per_char=4, seed=1))
        assert len(result) == 8
        assert result.partial
        assert list(np.flatnonzero(result.sequence.eoc)) == [3, 7]
        assert np.all(result.eoc_probs < 0.5)

    def test_word_starts_get_bow(self, small_cvrnn):
        model = _with_eoc_bias(small_cvrnn, 20.0)
        result = sample_text(model, "ab ab", cfg=SamplingConfig(seed=2))
        assert list(result.sequence.bow) == [1, 0, 1, 0]
        assert result.sequence.text == "ab ab"

    def test_first_row_starts_at_origin(self, small_cvrnn):
        result = sample_text(small_cvrnn, "ab", cfg=SamplingConfig(max_strokes_per_char=5, seed=3))
        np.testing.assert_array_equal(result.sequence.deltas[0, :2], [0.0, 0.0])
        assert set(np.unique(result.sequence.deltas[:, 2])) <= {0.0, 1.0}
        assert len(result.eoc_probs) == len(result)

    def test_empty_text(self, small_cvrnn):
        result = sample_text(small_cvrnn, "   ")
        assert len(result) == 0
        assert not result.partial

    def test_unknown_character(self, small_cvrnn):
        with pytest.raises(InkDataError):
            sample_text(small_cvrnn, "abz")

    def test_same_seed_same_strokes(self, small_cvrnn):
        cfg = SamplingConfig(max_strokes_per_char=6, seed=7)
        a = sample_text(small_cvrnn, "cab", cfg=cfg)
        b = sample_text(small_cvrnn, "cab", cfg=cfg)
        assert a.sequence.deltas.tobytes() == b.sequence.deltas.tobytes()

    def test_greedy_ignores_seed(self, small_cvrnn):
        a = sample_text(small_cvrnn, "ab", cfg=SamplingConfig(max_strokes_per_char=5, greedy=True, seed=1))
        b = sample_text(small_cvrnn, "ab", cfg=SamplingConfig(max_strokes_per_char=5, greedy=True, seed=2))
        np.testing.assert_array_equal(a.sequence.deltas, b.sequence.deltas)

    def test_style_state_changes_output(self, small_cvrnn, tiny_sequences):
        cfg = SamplingConfig(max_strokes_per_char=3, greedy=True)
        plain = sample_text(small_cvrnn, "ab", cfg=cfg)
        styled = sample_text(small_cvrnn, "ab", infer_style(small_cvrnn, tiny_sequences[0]), cfg=cfg)
        assert not np.array_equal(plain.sequence.deltas, styled.sequence.deltas)


class TestInferStyle:
    def test_empty_reference_is_zero_state(self, small_cvrnn):
        empty = EncodedSequence(np.zeros((0, 3)), [], [], [])
        state = infer_style(small_cvrnn, empty)
        for arr in (state.inp_h, state.inp_c, state.latent_h, state.latent_c):
            np.testing.assert_array_equal(arr, np.zeros(8))

    def test_reference_sets_latent_state(self, small_cvrnn, tiny_sequences):
        state = infer_style(small_cvrnn, tiny_sequences[0], seed=4)
        assert state.latent_h.shape == (8,)
        assert np.any(state.latent_h != 0)
        again = infer_style(small_cvrnn, tiny_sequences[0], seed=4)
        np.testing.assert_array_equal(state.latent_c, again.latent_c)

    def test_zero_input_keeps_latent_cell(self):
        state = RecurrentState(np.ones(2), np.ones(2), np.full(2, 3.0), np.full(2, 4.0))
        reset = state.with_zero_input()
        np.testing.assert_array_equal(reset.inp_h, [0.0, 0.0])
        np.testing.assert_array_equal(reset.latent_c, [4.0, 4.0])


class TestReconstruct:
    def test_length_and_labels(self, small_cvrnn, tiny_sequences):
        seq = tiny_sequences[1]
        out = reconstruct(small_cvrnn, seq)
        assert len(out) == len(seq)
        np.testing.assert_array_equal(out.y, seq.y)
        np.testing.assert_array_equal(out.deltas[0, :2], [0.0, 0.0])

    def test_greedy_is_deterministic(self, small_cvrnn, tiny_sequences):
        a = reconstruct(small_cvrnn, tiny_sequences[1], seed=1)
        b = reconstruct(small_cvrnn, tiny_sequences[1], seed=2)
        np.testing.assert_array_equal(a.deltas, b.deltas)

    def test_sampled_depends_on_seed(self, small_cvrnn, tiny_sequences):
        a = reconstruct(small_cvrnn, tiny_sequences[1], greedy=False, seed=1)
        b = reconstruct(small_cvrnn, tiny_sequences[1], greedy=False, seed=2)
        assert not np.array_equal(a.deltas, b.deltas)

    def test_future_strokes_do_not_change_the_past(self, small_cvrnn, rng):
        seq = toy_sequence(rng, 6, 3)
        changed = seq.deltas.copy()
        changed[4:, :2] += 5.0
        other = EncodedSequence(changed, seq.y, seq.eoc, seq.bow)
        a = reconstruct(small_cvrnn, seq)
        b = reconstruct(small_cvrnn, other)
        np.testing.assert_array_equal(a.deltas[:4], b.deltas[:4])
        assert not np.array_equal(a.deltas[4:], b.deltas[4:])

    def test_label_length_mismatch(self, small_cvrnn, tiny_sequences):
        with pytest.raises(InkDataError, match="label length mismatch"):
            reconstruct(small_cvrnn, tiny_sequences[0], labels=[0])

    def test_substitute_labels(self, small_cvrnn, tiny_sequences):
        seq = tiny_sequences[0]
        labels = np.zeros(len(seq), dtype=int)
        out = reconstruct(small_cvrnn, seq, labels=labels)
        np.testing.assert_array_equal(out.y, labels)


class TestRestyle:
    def test_rewrites_source_text(self, small_cvrnn, tiny_sequences):
        model = _with_eoc_bias(small_cvrnn, 20.0)
        source, reference = tiny_sequences[0], tiny_sequences[3]
        result = restyle(model, source, reference, SamplingConfig(seed=5))
        assert result.sequence.text == source.text
        assert len(result) == len(source.text.replace(" ", ""))

    def test_label_length_mismatch(self, small_cvrnn, tiny_sequences):
        with pytest.raises(InkDataError):
            restyle(small_cvrnn, tiny_sequences[0], tiny_sequences[1], labels=[0, 1])
