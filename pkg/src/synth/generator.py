"""Deterministic generator of labeled, style-varied handwriting-like corpora."""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ContractError, InkDataError
from ..models import FULL_ALPHABET, Alphabet, Corpus, InkSample
from .glyphs import DEFAULT_SUBSET, get_template, resample_polyline

logger = logging.getLogger(__name__)

UNIT = 20.0  # screen units per glyph box
BASELINE = 1.5
WORD_GAP = 0.8  # extra advance between words, in glyph widths


@dataclass(frozen=True)
class StyleVector:
    """Per-author appearance: shear, size, letter spacing, noise and baseline slope."""

    slant: float = 0.0
    scale: float = 1.0
    spacing: float = 0.2
    jitter: float = 0.0
    drift: float = 0.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ContractError("style scale must be positive")
        if self.jitter < 0:
            raise ContractError("style jitter must be non-negative")


IDENTITY_STYLE = StyleVector(slant=0.0, scale=1.0, spacing=0.0, jitter=0.0, drift=0.0)


def draw_style(rng: np.random.Generator) -> StyleVector:
    """Draw a random writer style."""
    return StyleVector(
        slant=float(rng.uniform(-0.35, 0.35)),
        scale=float(rng.uniform(0.8, 1.3)),
        spacing=float(rng.uniform(0.1, 0.5)),
        jitter=float(rng.uniform(0.005, 0.03)),
        drift=float(rng.uniform(-0.05, 0.05)),
    )


def apply_style(polyline: np.ndarray, style: StyleVector, rng: Optional[np.random.Generator] = None,
                offset: float = 0.0) -> np.ndarray:
    """Shear by slant, scale about the glyph origin, tilt the baseline, add jitter.

    offset is the glyph's horizontal position on the line, so drift
    accumulates across a word.
    """
    pts = np.asarray(polyline, dtype=np.float64)
    x = (pts[:, 0] + pts[:, 1] * math.tan(style.slant)) * style.scale
    y = pts[:, 1] * style.scale
    y = y + style.drift * (x + offset)
    out = np.stack([x, y], axis=1)
    if style.jitter > 0:
        if rng is None:
            raise ContractError("jittered styles need a random generator")
        out = out + rng.normal(0.0, style.jitter, size=out.shape)
    return out


def write_text(text: str, style: StyleVector, alphabet: Alphabet, points_per_glyph: int = 8,
               rng: Optional[np.random.Generator] = None, author: str = "") -> InkSample:
    """Render text glyph by glyph; spaces become extra advance, not points."""
    if points_per_glyph < 1:
        raise ContractError("points_per_glyph must be >= 1")
    words = [w for w in text.split(" ") if w]
    rows, y, eoc, bow = [], [], [], []
    cursor = 0.0
    for wi, word in enumerate(words):
        if wi > 0:
            cursor += WORD_GAP * style.scale
        for ci, ch in enumerate(word):
            k = alphabet.index(ch)
            local = resample_polyline(get_template(ch).polyline, points_per_glyph)
            styled = apply_style(local, style, rng, offset=cursor)
            u = (styled[:, 0] + cursor) * UNIT
            v = (BASELINE - styled[:, 1]) * UNIT
            pen = np.zeros(points_per_glyph)
            pen[-1] = 1
            rows.append(np.stack([u, v, pen], axis=1))
            y.extend([k] * points_per_glyph)
            eoc.extend([0] * (points_per_glyph - 1) + [1])
            bow.extend([1 if ci == 0 else 0] + [0] * (points_per_glyph - 1))
            cursor += style.scale * (1.0 + style.spacing)
    points = np.concatenate(rows) if rows else np.zeros((0, 3))
    return InkSample(points, y, eoc, bow, author=author, text=" ".join(words))


def generate_corpus(alphabet_subset: str = DEFAULT_SUBSET, authors: int = 4, samples_per_author: int = 10,
                    points_per_glyph: int = 8, seed: int = 0, max_words: int = 1,
                    max_word_length: int = 5) -> Corpus:
    """One style per author; each sample is 1..max_words random words over the subset (one by default)."""
    for name, value in (("authors", authors), ("samples_per_author", samples_per_author),
                        ("points_per_glyph", points_per_glyph), ("max_words", max_words),
                        ("max_word_length", max_word_length)):
        if value < 1:
            raise ContractError(f"{name} must be >= 1")
    for ch in alphabet_subset:
        if ch not in FULL_ALPHABET:
            raise InkDataError(f"unknown character {ch!r}: not in the alphabet")
        get_template(ch)
    alphabet = Alphabet(alphabet_subset)
    symbols = list(alphabet_subset)

    rng = np.random.default_rng(seed)
    samples = []
    for a in range(authors):
        style = draw_style(rng)
        name = f"author-{a:02d}"
        for _ in range(samples_per_author):
            n_words = int(rng.integers(1, max_words + 1))
            words = ["".join(rng.choice(symbols, size=int(rng.integers(1, max_word_length + 1))))
                     for _ in range(n_words)]
            samples.append(write_text(" ".join(words), style, alphabet, points_per_glyph, rng, author=name))
    logger.info(f"Generated {len(samples)} samples for {authors} authors over '{alphabet_subset}'")
    return Corpus(alphabet, samples)
