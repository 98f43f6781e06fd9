"""Coalition objectives and the pressure constraint.

Every coalition's objective is the total CO2 mass [Mt] its wells inject over
the whole period, a linear function of the rates. The constraint caps
``p / p_ob`` at 0.9 in every cell at every substep; it is reduced to the
scalar violation ``max(0, max p / p_ob - 0.9)``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .coalition import Coalition, CoalitionStructure
from .reservoir import (
    THRESHOLD,
    InjectionSchedule,
    LinearResponse,
    ReservoirModel,
    max_relative_pressure,
    simulate,
)


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioBounds:
    rate_min: float
    rate_max: float
    num_intervals: int
    interval_length: float

    def __post_init__(self):
        if not (0 < self.rate_min < self.rate_max):
            raise ValidationError(f"need 0 < rate_min < rate_max, got {self.rate_min}, {self.rate_max}")
        if self.num_intervals < 1:
            raise ValidationError(f"num_intervals must be >= 1, got {self.num_intervals}")
        if not self.interval_length > 0:
            raise ValidationError(f"interval_length must be positive, got {self.interval_length}")

    @property
    def duration(self) -> float:
        return self.num_intervals * self.interval_length

    def box(self, n_wells: int) -> tuple[np.ndarray, np.ndarray]:
        n = n_wells * self.num_intervals
        return np.full(n, self.rate_min), np.full(n, self.rate_max)


@dataclass(frozen=True)
class ObjectiveReport:
    values: tuple[float, ...]
    violation: float
    max_rel_pressure: float

    @property
    def feasible(self) -> bool:
        return self.violation == 0.0

    @property
    def total(self) -> float:
        return math.fsum(self.values)


def violation_of(max_rel_pressure):
    return np.maximum(0.0, np.asarray(max_rel_pressure) - THRESHOLD)


def coalition_value(schedule: InjectionSchedule, coalition: Coalition) -> float:
    """Mt injected by the coalition's wells over the whole schedule."""
    if coalition.members[-1] >= schedule.num_wells:
        raise ValidationError(f"coalition {coalition.members} references a well outside the schedule")
    return float(schedule.rates[list(coalition.members)].sum() * schedule.interval_length)


def membership_matrix(structure: CoalitionStructure) -> np.ndarray:
    """``M[w, j] = 1`` if well ``w`` belongs to coalition ``j``."""
    m = np.zeros((structure.n_agents, structure.m))
    m[np.arange(structure.n_agents), structure.canonical_key] = 1.0
    return m


def well_totals(rates: np.ndarray, n_wells: int, interval_length: float) -> np.ndarray:
    """Per-well Mt for flattened schedules of shape ``(..., n_wells * n_intervals)``."""
    r = np.asarray(rates, dtype=float)
    return r.reshape(*r.shape[:-1], n_wells, -1).sum(axis=-1) * interval_length


def coalition_values(rates: np.ndarray, structure: CoalitionStructure, interval_length: float) -> np.ndarray:
    return well_totals(rates, structure.n_agents, interval_length) @ membership_matrix(structure)


def evaluate(
    schedule: InjectionSchedule,
    structure: CoalitionStructure,
    model: ReservoirModel,
    bounds: ScenarioBounds,
) -> ObjectiveReport:
    """One full simulation of ``schedule`` and its objective report."""
    if schedule.num_intervals != bounds.num_intervals:
        raise ValidationError(f"schedule has {schedule.num_intervals} intervals, expected {bounds.num_intervals}")
    history = simulate(model, schedule)
    mrp = max_relative_pressure(history, model)
    values = tuple(coalition_value(schedule, c) for c in structure.coalitions)
    return ObjectiveReport(values, float(violation_of(mrp)), mrp)


def weighted_sum(report: ObjectiveReport | np.ndarray, weights) -> float:
    values = np.asarray(report.values if isinstance(report, ObjectiveReport) else report, dtype=float)
    w = np.asarray(weights, dtype=float)
    check_weights(w, len(values))
    return float(values @ w)


def check_weights(w: np.ndarray, m: int) -> None:
    if w.shape != (m,):
        raise ValidationError(f"expected {m} weights, got {w.shape[0] if w.ndim == 1 else w.shape}")
    if np.any(w < 0):
        raise ValidationError(f"weights must be nonnegative: {w.tolist()}")
    if abs(math.fsum(w) - 1.0) > 1e-12:
        raise ValidationError(f"weights must sum to 1, got {math.fsum(w)!r}")


class Evaluator:
    """Counts and caches model evaluations for one coalition structure.

    Schedules are flattened rate matrices (well-major). By default the
    precomputed :class:`LinearResponse` is used; ``direct=True`` runs
    :func:`simulate` for every new schedule instead. Both agree to round-off.
    Identical schedules (bit for bit) are served from the cache and are not
    counted again.
    """

    def __init__(
        self,
        model: ReservoirModel,
        bounds: ScenarioBounds,
        structure: CoalitionStructure,
        response: LinearResponse | None = None,
        direct: bool = False,
    ):
        if structure.n_agents != model.n_wells:
            raise ValidationError(f"structure covers {structure.n_agents} agents, model has {model.n_wells} wells")
        self.model = model
        self.bounds = bounds
        self.structure = structure
        self.direct = direct
        if response is None and not direct:
            response = LinearResponse(model, bounds.num_intervals, bounds.interval_length)
        self.response = response
        self._membership = membership_matrix(structure)
        self._cache: dict[bytes, float] = {}
        self._lock = threading.Lock()
        self.n_evaluations = 0

    @property
    def n_design(self) -> int:
        return self.model.n_wells * self.bounds.num_intervals

    def box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.bounds.box(self.model.n_wells)

    def values(self, X: np.ndarray) -> np.ndarray:
        return well_totals(X, self.model.n_wells, self.bounds.interval_length) @ self._membership

    def _max_rel(self, X: np.ndarray) -> np.ndarray:
        keys = [x.tobytes() for x in X]
        out = np.empty(len(X))
        with self._lock:
            missing = {}
            for i, k in enumerate(keys):
                if k in self._cache:
                    out[i] = self._cache[k]
                else:
                    missing.setdefault(k, []).append(i)
        if missing:
            rows = np.array([X[idx[0]] for idx in missing.values()])
            if self.direct:
                mrp = np.array([self._simulate_one(r) for r in rows])
            else:
                mrp = self.response.max_relative_pressure(rows)
            with self._lock:
                for (k, idx), v in zip(missing.items(), mrp):
                    if k not in self._cache:
                        self._cache[k] = float(v)
                        self.n_evaluations += 1
                    out[idx] = v
        return out

    def _simulate_one(self, flat: np.ndarray) -> float:
        sched = InjectionSchedule(flat.reshape(self.model.n_wells, -1), self.bounds.interval_length)
        return max_relative_pressure(simulate(self.model, sched), self.model)

    def evaluate_batch(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(values (k, m), violations (k,), max_rel_pressure (k,))``."""
        X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=float)))
        if X.shape[1] != self.n_design:
            raise ValidationError(f"expected {self.n_design} design variables, got {X.shape[1]}")
        mrp = self._max_rel(X)
        return self.values(X), violation_of(mrp), mrp

    def evaluate(self, schedule: InjectionSchedule | np.ndarray) -> ObjectiveReport:
        flat = schedule.flat() if isinstance(schedule, InjectionSchedule) else np.asarray(schedule, dtype=float).ravel()
        values, viol, mrp = self.evaluate_batch(flat[None, :])
        return ObjectiveReport(tuple(values[0].tolist()), float(viol[0]), float(mrp[0]))

    def scalarized(self, weights):
        """Vectorized fitness ``X -> (weighted sum, violation)`` for the single-objective optimizer."""
        w = np.asarray(weights, dtype=float)
        check_weights(w, self.structure.m)

        def fitness(X):
            values, viol, _ = self.evaluate_batch(X)
            return values @ w, viol

        return fitness

    def objectives(self, X):
        """Vectorized ``X -> (values, violation)`` for the multi-objective optimizer."""
        values, viol, _ = self.evaluate_batch(X)
        return values, viol
