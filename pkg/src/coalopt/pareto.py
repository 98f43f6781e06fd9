"""Pareto fronts: weight grids, dominance filtering, selection and hypervolume.

All objectives are maximized.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Sequence

import numpy as np

from .coalition import AgentSet, CoalitionStructure

log = logging.getLogger(__name__)


class FrontError(ValueError):
    pass


@dataclass
class FrontPoint:
    values: np.ndarray  # Mt per coalition
    rates: np.ndarray  # (wells, intervals) Mt/yr
    method: str
    weights: tuple[float, ...] | None = None
    max_rel_pressure: float = float("nan")

    @property
    def total(self) -> float:
        return math.fsum(self.values)


@dataclass
class ParetoFront:
    points: list[FrontPoint]
    structure: CoalitionStructure
    records: list[dict] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def objective_matrix(self) -> np.ndarray:
        if not self.points:
            return np.empty((0, self.structure.m))
        return np.array([p.values for p in self.points])

    def coalition_labels(self, agents: AgentSet) -> list[str]:
        return [c.label(agents) for c in self.structure.coalitions]


def weight_grid(m: int, increment: float) -> list[tuple[float, ...]]:
    """All weight vectors on the simplex lattice with spacing ``increment = 1/K``.

    Ordered lexicographically by the first component (ascending), e.g.
    ``(0, 1), (0.1, 0.9), ..., (1, 0)`` for ``m = 2``.
    """
    if m < 1:
        raise FrontError(f"need at least one objective, got m={m}")
    if not increment > 0:
        raise FrontError(f"weight increment must be positive, got {increment}")
    k = round(1.0 / increment)
    if k < 1 or abs(k * increment - 1.0) > 1e-9:
        raise FrontError(f"weight increment must be 1/K for an integer K, got {increment}")
    if m == 1:
        return [(1.0,)]
    grid = set()
    # compositions of k into m parts via bars between stars
    for bars in combinations_with_replacement(range(k + 1), m - 1):
        parts = np.diff((0, *bars, k))
        grid.add(tuple(int(p) for p in parts))
    return [tuple(i / k for i in comp) for comp in sorted(grid)]


def dominates(a, b) -> bool:
    a = np.asarray(a)
    b = np.asarray(b)
    return bool(np.all(a >= b) and np.any(a > b))


def nondominated_mask(values: np.ndarray) -> np.ndarray:
    """Mask of maximal rows; identical rows keep only their first occurrence."""
    F = np.asarray(values, dtype=float)
    if F.ndim != 2:
        raise FrontError(f"expected a 2-D objective array, got shape {F.shape}")
    n = len(F)
    geq = np.all(F[:, None, :] >= F[None, :, :], axis=2)
    gt = np.any(F[:, None, :] > F[None, :, :], axis=2)
    dominated = np.any(geq & gt, axis=0)
    equal = geq & geq.T
    earlier_duplicate = np.any(np.tril(equal, k=-1), axis=1)
    return ~dominated & ~earlier_duplicate if n else np.zeros(0, dtype=bool)


def filter_nondominated(points: Sequence):
    """Keep the non-dominated entries of ``points`` in their original order.

    Entries may be objective vectors or objects with a ``values`` attribute.
    An array input returns an array.
    """
    if isinstance(points, np.ndarray):
        return points[nondominated_mask(points)] if len(points) else points
    points = list(points)
    if not points:
        return []
    F = np.array([getattr(p, "values", p) for p in points], dtype=float)
    keep = nondominated_mask(F)
    return [p for p, k in zip(points, keep) if k]


def select_max_total(front: ParetoFront | Sequence[FrontPoint]) -> FrontPoint:
    points = list(front)
    if not points:
        raise FrontError("cannot select from an empty front")
    totals = [p.total for p in points]
    return points[int(np.argmax(totals))]


def select_max_agent(front: ParetoFront, agent_index: int) -> FrontPoint:
    """Point maximizing the value of the coalition containing ``agent_index``.

    Ties go to the larger total, then to the earlier point.
    """
    if not front.points:
        raise FrontError("cannot select from an empty front")
    if not 0 <= agent_index < front.structure.n_agents:
        raise FrontError(f"agent {agent_index} is not part of structure {front.structure.canonical_key}")
    j = front.structure.coalition_of(agent_index)
    best = front.points[0]
    for p in front.points[1:]:
        if (p.values[j], p.total) > (best.values[j], best.total):
            best = p
    return best


def hypervolume(points, reference) -> float:
    """Exact hypervolume dominated by ``points`` above ``reference`` (m <= 3)."""
    F = np.asarray([getattr(p, "values", p) for p in points] if not isinstance(points, np.ndarray) else points, dtype=float)
    r = np.asarray(reference, dtype=float)
    if F.size == 0:
        return 0.0
    if F.ndim != 2 or F.shape[1] != r.size:
        raise FrontError(f"points of shape {F.shape} do not match reference of size {r.size}")
    if np.any(F < r):
        raise FrontError("reference point must be dominated by every front point")
    m = r.size
    if m == 1:
        return float(F.max() - r[0])
    if m == 2:
        return _hv2d(F, r)
    if m == 3:
        return _hv3d(F, r)
    raise FrontError(f"exact hypervolume is implemented for up to 3 objectives, got {m}")


def _hv2d(F: np.ndarray, r: np.ndarray) -> float:
    F = F[nondominated_mask(F)]
    F = F[np.argsort(-F[:, 0], kind="stable")]
    hv = 0.0
    prev_y = r[1]
    for x, y in F:
        # sorted by x descending, so y increases along the front
        hv += (x - r[0]) * (y - prev_y)
        prev_y = y
    return float(hv)


def _hv3d(F: np.ndarray, r: np.ndarray) -> float:
    F = F[nondominated_mask(F)]
    levels = np.unique(F[:, 2])[::-1]
    hv = 0.0
    for top, below in zip(levels, np.append(levels[1:], r[2])):
        slab = F[F[:, 2] >= top][:, :2]
        hv += _hv2d(slab, r[:2]) * (top - below)
    return float(hv)
