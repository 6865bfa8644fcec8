"""Preprocessing between screen coordinates and model space.

Pipeline: split long samples at character boundaries, shift each sample to the
origin, take point-to-point deltas, and normalize deltas with corpus-wide
statistics. Pen flags pass through untouched.
"""

import logging
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from ..errors import ContractError, InkDataError
from ..models import Alphabet, Corpus, EncodedSequence, InkSample, NormStats

logger = logging.getLogger(__name__)

MAX_STROKES = 300
STD_FLOOR = 1e-8
HARD_SPLIT = "hard_split"


def labels_to_text(y: Sequence[int], eoc: Sequence[int], bow: Sequence[int], alphabet: Alphabet) -> str:
    """One symbol per eoc=1 step; a space before each later bow=1 step."""
    out = []
    for t, (k, e, b) in enumerate(zip(y, eoc, bow)):
        if b and t > 0 and out:
            out.append(" ")
        if e:
            out.append(alphabet.symbol(int(k)))
    return "".join(out)


def split_long_samples(sample: InkSample, max_strokes: int = MAX_STROKES,
                       alphabet: Alphabet = None) -> List[InkSample]:
    """Split a sample longer than max_strokes right after eoc=1 points.

    The cut goes after the latest eoc=1 within the first max_strokes points.
    With no such point the piece is cut hard at max_strokes and flagged.
    """
    if max_strokes < 1:
        raise ContractError(f"max_strokes must be >= 1, got {max_strokes}")
    if len(sample) <= max_strokes:
        return [sample]

    pieces = []
    start = 0
    T = len(sample)
    while T - start > max_strokes:
        window = sample.eoc[start:start + max_strokes]
        ends = np.flatnonzero(window == 1)
        flags = frozenset()
        if len(ends):
            stop = start + int(ends[-1]) + 1
        else:
            stop = start + max_strokes
            flags = frozenset({HARD_SPLIT})
            logger.warning(
                f"No end-of-character label within {max_strokes} points of sample "
                f"'{sample.text}' ({sample.author}); hard split at index {stop}"
            )
        pieces.append((start, stop, flags))
        start = stop
    pieces.append((start, T, frozenset()))

    out = []
    for begin, end, flags in pieces:
        piece = sample.slice(begin, end)
        if alphabet is not None:
            piece.text = labels_to_text(piece.y, piece.eoc, piece.bow, alphabet)
        piece.flags = flags
        out.append(piece)
    return out


def split_corpus(corpus: Corpus, max_strokes: int = MAX_STROKES) -> Corpus:
    """split_long_samples over every sample, texts rebuilt from the labels."""
    samples = [p for s in corpus.samples for p in split_long_samples(s, max_strokes, corpus.alphabet)]
    if len(samples) != len(corpus.samples):
        logger.info(f"Split {len(corpus.samples)} samples into {len(samples)} (max {max_strokes} points)")
    return Corpus(corpus.alphabet, samples, corpus.version)


def train_validation_split(corpus: Corpus, validation_fraction: float, seed: int = 0) -> Tuple[Corpus, Corpus]:
    """Deterministic held-out split; the validation part keeps at least one sample when asked for."""
    n = len(corpus.samples)
    n_val = int(round(n * validation_fraction))
    if validation_fraction > 0 and n > 1:
        n_val = min(max(n_val, 1), n - 1)
    order = np.random.default_rng(seed).permutation(n)
    val_idx = set(int(i) for i in order[:n_val])
    train = [s for i, s in enumerate(corpus.samples) if i not in val_idx]
    val = [s for i, s in enumerate(corpus.samples) if i in val_idx]
    return Corpus(corpus.alphabet, train, corpus.version), Corpus(corpus.alphabet, val, corpus.version)


def raw_deltas(points: np.ndarray) -> np.ndarray:
    """(du, dv) between consecutive points; T-1 rows."""
    return np.diff(points[:, :2], axis=0)


def compute_stats(samples: Union[Corpus, Iterable[InkSample]]) -> NormStats:
    """Mean and population std of all (du, dv) over the given samples."""
    if isinstance(samples, Corpus):
        samples = samples.samples
    chunks = [raw_deltas(s.points) for s in samples if len(s) >= 2]
    total = sum(len(c) for c in chunks)
    if total < 2:
        raise InkDataError(f"need at least 2 deltas to compute statistics, got {total}")
    deltas = np.concatenate(chunks)
    mean = deltas.mean(axis=0)
    std = deltas.std(axis=0)
    degenerate = [axis for axis, s in zip("uv", std) if s < STD_FLOOR]
    if degenerate:
        logger.warning(f"Degenerate delta std on axis {', '.join(degenerate)}; flooring to {STD_FLOOR}")
    std = np.maximum(std, STD_FLOOR)
    return NormStats(tuple(float(m) for m in mean), tuple(float(s) for s in std))


def to_model_space(sample: InkSample, stats: NormStats) -> EncodedSequence:
    """Origin shift, deltas with d_0 = (0, 0), normalization; pen copied verbatim."""
    if len(sample) == 0:
        raise InkDataError("cannot encode an empty sample")
    points = sample.points
    shifted = points[:, :2] - points[0, :2]
    deltas = np.zeros((len(points), 3))
    deltas[1:, :2] = (raw_deltas(shifted) - stats.mean_array) / stats.std_array
    deltas[:, 2] = points[:, 2]
    return EncodedSequence(deltas, sample.y.copy(), sample.eoc.copy(), sample.bow.copy(),
                           author=sample.author, text=sample.text)


def from_model_space(encoded: EncodedSequence, stats: NormStats,
                     origin: Tuple[float, float] = (0.0, 0.0)) -> InkSample:
    """Inverse of to_model_space given the first point's screen position."""
    T = len(encoded)
    offsets = np.zeros((T, 2))
    if T:
        offsets[0] = encoded.deltas[0, :2]
        offsets[1:] = encoded.deltas[1:, :2] * stats.std_array + stats.mean_array
    coords = np.cumsum(offsets, axis=0) + np.asarray(origin, dtype=np.float64)
    pen = np.round(encoded.deltas[:, 2:3]).clip(0, 1)
    return InkSample(np.concatenate([coords, pen], axis=1), encoded.y.copy(), encoded.eoc.copy(),
                     encoded.bow.copy(), author=encoded.author, text=encoded.text)


def encode_corpus(corpus: Corpus, stats: NormStats) -> List[EncodedSequence]:
    """to_model_space over the non-empty samples."""
    return [to_model_space(s, stats) for s in corpus.samples if len(s) > 0]
