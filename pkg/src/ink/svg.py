"""Render ink samples as SVG polylines."""

import logging
from pathlib import Path
from typing import List, Union

import numpy as np
from lxml import etree

from ..models import InkSample
from ..storage import atomic_write_text

logger = logging.getLogger(__name__)

SVG_NS = "http://www.w3.org/2000/svg"
STROKE_WIDTH = 2
MARGIN = 0.05
MIN_EXTENT = 0.01


def pen_runs(points: np.ndarray) -> List[np.ndarray]:
    """Split points into visible lines; a pen=1 point closes its line."""
    runs = []
    current = []
    for row in points:
        current.append(row)
        if row[2] == 1:
            runs.append(np.array(current))
            current = []
    if current:
        runs.append(np.array(current))
    return runs


def _fmt(x: float) -> str:
    text = f"{x:.3f}".rstrip("0").rstrip(".")
    return "0" if text in ("", "-0") else text


def render_svg(sample: InkSample) -> str:
    """SVG 1.1 document with one polyline per pen-down run."""
    root = etree.Element(f"{{{SVG_NS}}}svg", nsmap={None: SVG_NS}, version="1.1")
    if len(sample) == 0:
        root.set("viewBox", "0 0 1 1")
    else:
        uv = sample.points[:, :2]
        lo = uv.min(axis=0)
        extent = uv.max(axis=0) - lo
        # flat or near-flat axes get a unit-wide box
        pad = np.where(extent >= MIN_EXTENT, MARGIN * extent, 0.5)
        x0, y0 = lo - pad
        w, h = extent + 2 * pad
        root.set("viewBox", f"{_fmt(x0)} {_fmt(y0)} {_fmt(w)} {_fmt(h)}")
        group = etree.SubElement(root, f"{{{SVG_NS}}}g", fill="none", stroke="black")
        group.set("stroke-width", str(STROKE_WIDTH))
        group.set("stroke-linecap", "round")
        group.set("stroke-linejoin", "round")
        for run in pen_runs(sample.points):
            coords = " ".join(f"{_fmt(u)},{_fmt(v)}" for u, v, _ in run)
            etree.SubElement(group, f"{{{SVG_NS}}}polyline", points=coords)
    if sample.text:
        title = etree.Element(f"{{{SVG_NS}}}title")
        title.text = sample.text
        root.insert(0, title)
    return etree.tostring(root, xml_declaration=True, encoding="UTF-8", pretty_print=True).decode("utf-8")


def save_svg(sample: InkSample, path: Union[str, Path]) -> str:
    """Render sample and write the SVG atomically."""
    written = atomic_write_text(path, render_svg(sample))
    logger.info(f"Rendered {len(sample)} points to {path}")
    return written
