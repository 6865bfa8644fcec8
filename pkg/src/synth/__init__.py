"""Synthetic handwriting corpora for desk-scale training."""

from .generator import IDENTITY_STYLE, StyleVector, apply_style, draw_style, generate_corpus, write_text
from .glyphs import DEFAULT_SUBSET, TEMPLATES, GlyphTemplate, get_template, resample_polyline

__all__ = [
    "IDENTITY_STYLE",
    "StyleVector",
    "apply_style",
    "draw_style",
    "generate_corpus",
    "write_text",
    "DEFAULT_SUBSET",
    "TEMPLATES",
    "GlyphTemplate",
    "get_template",
    "resample_polyline",
]
