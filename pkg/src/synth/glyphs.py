"""Hand-authored glyph templates for the toy alphabet."""

from dataclasses import dataclass
from typing import Dict

import numpy as np

from ..errors import InkDataError


@dataclass(frozen=True)
class GlyphTemplate:
    """Control polyline in the unit box, y pointing up; the last point ends the character."""

    char: str
    polyline: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.polyline, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise InkDataError(f"glyph {self.char!r} needs at least 2 points")
        if np.any(pts < 0) or np.any(pts > 1):
            raise InkDataError(f"glyph {self.char!r} leaves the unit box")
        object.__setattr__(self, "polyline", pts)


# 5 segments each
_CONTROL_POINTS = {
    "a": [(0.80, 0.60), (0.40, 0.70), (0.15, 0.40), (0.40, 0.10), (0.80, 0.30), (0.85, 0.00)],
    "b": [(0.20, 1.00), (0.20, 0.00), (0.60, 0.05), (0.80, 0.30), (0.55, 0.55), (0.20, 0.45)],
    "c": [(0.80, 0.60), (0.50, 0.70), (0.20, 0.50), (0.20, 0.20), (0.50, 0.00), (0.80, 0.10)],
    "d": [(0.80, 1.00), (0.80, 0.00), (0.40, 0.05), (0.20, 0.30), (0.45, 0.55), (0.80, 0.45)],
    "e": [(0.20, 0.35), (0.80, 0.40), (0.60, 0.70), (0.25, 0.60), (0.20, 0.20), (0.80, 0.05)],
}

TEMPLATES: Dict[str, GlyphTemplate] = {ch: GlyphTemplate(ch, np.array(pts)) for ch, pts in _CONTROL_POINTS.items()}

DEFAULT_SUBSET = "abcde"


def get_template(ch: str) -> GlyphTemplate:
    """Template for one character, InkDataError if unknown."""
    try:
        return TEMPLATES[ch]
    except KeyError:
        raise InkDataError(f"unknown character {ch!r}: no glyph template") from None


def resample_polyline(polyline: np.ndarray, r: int) -> np.ndarray:
    """r points spaced evenly by arc length along the polyline."""
    if r == 1:
        return polyline[:1].copy()
    seg = np.linalg.norm(np.diff(polyline, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.linspace(0.0, s[-1], r)
    return np.stack([np.interp(targets, s, polyline[:, 0]), np.interp(targets, s, polyline[:, 1])], axis=1)
