"""Central finite-difference check of graph gradients."""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ContractError
from .graph import Graph, Node

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GradCheckEntry:
    name: str
    index: Tuple[int, ...]
    analytic: float
    numeric: float
    rel_error: float


@dataclass
class GradCheckReport:
    tol: float
    entries: List[GradCheckEntry] = field(default_factory=list)

    @property
    def max_rel_error(self) -> float:
        return max((e.rel_error for e in self.entries), default=0.0)

    @property
    def failures(self) -> List[GradCheckEntry]:
        return [e for e in self.entries if not e.rel_error < self.tol]

    @property
    def passed(self) -> bool:
        return not self.failures


def relative_error(analytic: float, numeric: float) -> float:
    """Absolute difference scaled by the larger magnitude, floored at 1."""
    return abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric))


def grad_check(
    graph: Graph,
    loss: Node,
    params: Optional[Sequence[str]] = None,
    h: float = 1e-5,
    tol: float = 1e-4,
    max_entries: Optional[int] = None,
    seed: int = 0,
) -> GradCheckReport:
    """Compare backward() against central differences of the replayed graph.

    Args:
        graph: a graph whose ops have been recorded
        loss: scalar node in that graph
        params: parameter names to check (default: all registered)
        h: finite-difference step
        tol: relative tolerance, |a - n| / max(1, |a|, |n|)
        max_entries: check a seeded random subset of this many entries

    Returns:
        GradCheckReport; failures are reported, not raised
    """
    if loss.size != 1:
        raise ContractError(f"grad_check needs a scalar loss, got shape {loss.shape}")
    names = list(graph.params) if params is None else list(params)
    for name in names:
        if name not in graph.params:
            raise ContractError(f"no parameter named {name!r}")

    analytic = graph.backward(loss)
    candidates = [(name, idx) for name in names for idx in np.ndindex(graph.params[name].shape)]
    if max_entries is not None and len(candidates) > max_entries:
        rng = np.random.default_rng(seed)
        picks = rng.choice(len(candidates), size=max_entries, replace=False)
        candidates = [candidates[i] for i in sorted(picks)]

    report = GradCheckReport(tol=tol)
    originals = {name: graph.params[name].value.copy() for name in names}
    try:
        for name, idx in candidates:
            base = originals[name]
            plus = base.copy()
            plus[idx] += h
            graph.forward({name: plus})
            f_plus = float(loss.value)
            minus = base.copy()
            minus[idx] -= h
            graph.forward({name: minus})
            f_minus = float(loss.value)
            graph.forward({name: base})

            numeric = (f_plus - f_minus) / (2.0 * h)
            a = float(analytic[name][idx])
            report.entries.append(GradCheckEntry(name, tuple(idx), a, numeric, relative_error(a, numeric)))
    finally:
        graph.forward(originals)

    if report.failures:
        logger.warning(
            f"Gradient check: {len(report.failures)}/{len(report.entries)} entries above tol {tol} "
            f"(max {report.max_rel_error:.3g})"
        )
    return report
