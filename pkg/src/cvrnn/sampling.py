"""Conditional synthesis, style inference and reconstruction."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..distributions import bivariate_sample, gaussian_sample
from ..errors import InkDataError
from ..ink.preprocess import labels_to_text
from ..models import EncodedSequence, SamplingConfig
from ..nn import lstm_step
from .model import CvrnnModel
from .network import (
    CvrnnParams,
    CvrnnState,
    RecurrentState,
    content_code,
    decode_step,
    latent_update,
    posterior_step,
    prior_step,
)

logger = logging.getLogger(__name__)


@dataclass
class SampleResult:
    """A synthesized sequence in model space and the eoc probability of every step."""

    sequence: EncodedSequence
    eoc_probs: np.ndarray
    partial: bool = False

    def __len__(self) -> int:
        return len(self.sequence)


def _characters(text: str, model: CvrnnModel) -> List[Tuple[int, bool]]:
    """(class index, starts a word) per non-space character."""
    chars = []
    for word in text.split():
        for i, ch in enumerate(word):
            if ch not in model.alphabet:
                raise InkDataError(f"character {ch!r} is not in the alphabet", field="text")
            chars.append((model.alphabet.index(ch), i == 0))
    return chars


def _draw_pen(probability: float, rng: np.random.Generator, greedy: bool) -> float:
    if greedy:
        return 1.0 if probability > 0.5 else 0.0
    return 1.0 if rng.random() < probability else 0.0


def _empty(text: str = "") -> EncodedSequence:
    return EncodedSequence(np.zeros((0, 3)), [], [], [], text=text)


def sample_text(model: CvrnnModel, text: str, initial: Optional[RecurrentState] = None,
                cfg: Optional[SamplingConfig] = None) -> SampleResult:
    """Write text stroke by stroke, advancing a character once eoc exceeds the threshold.

    initial is a latent state from infer_style; only its latent cell is used.
    A character that reaches max_strokes_per_char is force-advanced and the
    result is flagged partial.
    """
    cfg = cfg or SamplingConfig()
    chars = _characters(text, model)
    normalized = " ".join(text.split())
    if not chars:
        return SampleResult(_empty(normalized), np.zeros(0))

    H, Dz, Dphi = model.config.hidden_size, model.config.latent_size, model.config.gmm_size
    state = (initial or RecurrentState.zeros(H)).with_zero_input()
    rng = np.random.default_rng(cfg.seed)

    rows, ys, eocs, bows, probs = [], [], [], [], []
    partial = False
    n, strokes = 0, 0
    while n < len(chars):
        k, word_start = chars[n]
        bow = 1 if word_start and strokes == 0 else 0

        graph = model.new_graph()
        params = CvrnnParams.bind(graph.bind(model.params))
        current = CvrnnState.from_arrays(graph, state)
        z_p, _ = prior_step(current, params)
        # the prior over pi is replaced by the requested character
        z = z_p.mu if cfg.greedy else gaussian_sample(z_p, rng.standard_normal(Dz))
        phi = content_code(params, k, None if cfg.greedy else rng.standard_normal(Dphi))
        out = decode_step(z, phi, bow, params)

        xy = bivariate_sample(out.coords, None if cfg.greedy else rng.standard_normal(2), cfg.greedy)
        pen = _draw_pen(out.pen.probability, rng, cfg.greedy)
        if not rows:
            xy = np.zeros(2)
        eoc_p = out.eoc.probability
        strokes += 1
        advance = eoc_p > cfg.eoc_threshold
        if not advance and strokes >= cfg.max_strokes_per_char:
            logger.warning(
                f"Character {n + 1}/{len(chars)} ({model.alphabet.symbol(k)!r}) hit the cap of "
                f"{cfg.max_strokes_per_char} strokes; advancing"
            )
            advance = True
            partial = True

        row = np.array([xy[0], xy[1], pen])
        rows.append(row)
        ys.append(k)
        eocs.append(1 if advance else 0)
        bows.append(bow)
        probs.append(eoc_p)

        h_inp = lstm_step(graph.constant(row), current.inp, params.inp)
        state = latent_update(h_inp, z, phi, current, params).to_arrays()
        if advance:
            n += 1
            strokes = 0

    sequence = EncodedSequence(np.array(rows), ys, eocs, bows, text=normalized)
    logger.debug(f"Sampled {len(rows)} strokes for '{normalized}'")
    return SampleResult(sequence, np.array(probs), partial)


def infer_style(model: CvrnnModel, seq: EncodedSequence, seed: int = 0) -> RecurrentState:
    """Posterior pass over the strokes of a labeled reference; returns the final state."""
    H = model.config.hidden_size
    if len(seq) == 0:
        return RecurrentState.zeros(H)
    model.check_labels(seq)
    rng = np.random.default_rng(seed)
    graph = model.new_graph()
    params = CvrnnParams.bind(graph.bind(model.params))
    state = CvrnnState.zeros(graph, H)
    for t in range(len(seq)):
        h_inp, z_q, _ = posterior_step(graph.constant(seq.deltas[t]), state, params)
        z = gaussian_sample(z_q, rng.standard_normal(model.config.latent_size))
        phi = content_code(params, int(seq.y[t]), rng.standard_normal(model.config.gmm_size))
        state = latent_update(h_inp, z, phi, state, params)
    return state.to_arrays()


def reconstruct(model: CvrnnModel, seq: EncodedSequence, labels: Optional[Sequence[int]] = None,
                greedy: bool = True, seed: int = 0) -> EncodedSequence:
    """Re-decode every step of a sample from its own posterior.

    labels default to the sample's; pass recognizer output for unlabeled ink.
    Greedy uses posterior means and component means throughout.
    """
    y = seq.y if labels is None else np.asarray(labels, dtype=np.int64).reshape(-1)
    if len(y) != len(seq):
        raise InkDataError("label length mismatch", field="y")
    if len(seq) == 0:
        return _empty(seq.text)
    labeled = EncodedSequence(seq.deltas, y, seq.eoc, seq.bow, author=seq.author, text=seq.text)
    model.check_labels(labeled)

    rng = np.random.default_rng(seed)
    graph = model.new_graph()
    params = CvrnnParams.bind(graph.bind(model.params))
    state = CvrnnState.zeros(graph, model.config.hidden_size)
    rows = np.zeros((len(seq), 3))
    for t in range(len(seq)):
        h_inp, z_q, _ = posterior_step(graph.constant(seq.deltas[t]), state, params)
        k = int(y[t])
        if greedy:
            z = z_q.mu
            phi = content_code(params, k, None)
        else:
            z = gaussian_sample(z_q, rng.standard_normal(model.config.latent_size))
            phi = content_code(params, k, rng.standard_normal(model.config.gmm_size))
        out = decode_step(z, phi, seq.bow[t], params)
        if t > 0:
            rows[t, :2] = bivariate_sample(out.coords, None if greedy else rng.standard_normal(2), greedy)
        rows[t, 2] = _draw_pen(out.pen.probability, rng, greedy)
        state = latent_update(h_inp, z, phi, state, params)
    return EncodedSequence(rows, y.copy(), seq.eoc.copy(), seq.bow.copy(), author=seq.author, text=seq.text)


def restyle(model: CvrnnModel, seq: EncodedSequence, reference: EncodedSequence,
            cfg: Optional[SamplingConfig] = None, labels: Optional[Sequence[int]] = None) -> SampleResult:
    """Rewrite the content of seq in the style inferred from reference."""
    cfg = cfg or SamplingConfig()
    y = seq.y if labels is None else np.asarray(labels, dtype=np.int64).reshape(-1)
    if len(y) != len(seq):
        raise InkDataError("label length mismatch", field="y")
    text = labels_to_text(y, seq.eoc, seq.bow, model.alphabet)
    style = infer_style(model, reference, seed=cfg.seed)
    logger.info(f"Restyling '{text}' after a {len(reference)}-stroke reference")
    return sample_text(model, text, style, cfg)
