"""Two-population constrained multi-objective evolutionary optimizer.

The main population ranks individuals with constrained dominance. The
auxiliary population solves a relaxed problem in which a violation up to
``eps_t = eps_0 * (1 - t / T) ** decay`` counts as feasible, so it can cross
infeasible regions early and is pulled back to the true problem as the
budget ``T`` runs out. Each generation both populations breed offspring with
SBX crossover and polynomial mutation; the combined offspring pool enters the
environmental selection of both populations (NSGA-II style: non-dominated
sorting, then crowding distance). Every feasible offspring also feeds an
unbounded non-dominated archive, which is the returned front.

Objectives are maximized.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cso import ConfigurationError, stream
from .pareto import hypervolume, nondominated_mask

log = logging.getLogger(__name__)

Objectives = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]

_INIT, _MATING, _MAIN, _AUX = 0, 1, 0, 1
MAX_STALLED_GENERATIONS = 50


@dataclass(frozen=True)
class MooConfig:
    population: int = 50
    max_evaluations: int = 5000
    seed: int = 0
    relaxation_decay: float = 2.0
    eta_crossover: float = 20.0
    eta_mutation: float = 20.0
    crossover_probability: float = 1.0
    seed_lower_corner: bool = True

    def __post_init__(self):
        if self.population < 8:
            raise ConfigurationError(f"population must be >= 8, got {self.population}")
        if self.max_evaluations < 2 * self.population:
            raise ConfigurationError(
                f"max_evaluations ({self.max_evaluations}) must be at least twice the population ({self.population})"
            )
        if not self.relaxation_decay > 0:
            raise ConfigurationError(f"relaxation_decay must be positive, got {self.relaxation_decay}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


def epsilon_schedule(eps0: float, used: int, budget: int, decay: float) -> float:
    frac = min(max(used / budget, 0.0), 1.0)
    return eps0 * (1.0 - frac) ** decay


def dominance_matrix(F: np.ndarray, V: np.ndarray, epsilon: float = 0.0) -> np.ndarray:
    """``D[i, j]`` is True if point ``i`` dominates point ``j``.

    Violations at or below ``epsilon`` count as feasible; feasible beats
    infeasible, infeasible points compare by violation, and feasible points
    by Pareto dominance.
    """
    F = np.asarray(F, dtype=float)
    V = np.where(np.asarray(V, dtype=float) <= epsilon, 0.0, np.asarray(V, dtype=float))
    feas = V == 0.0
    geq = np.all(F[:, None, :] >= F[None, :, :], axis=2)
    gt = np.any(F[:, None, :] > F[None, :, :], axis=2)
    pareto = geq & gt
    both_feas = feas[:, None] & feas[None, :]
    one_feas = feas[:, None] & ~feas[None, :]
    both_inf = ~feas[:, None] & ~feas[None, :]
    return (both_feas & pareto) | one_feas | (both_inf & (V[:, None] < V[None, :]))


def nondominated_sort(F: np.ndarray, V: np.ndarray | None = None, epsilon: float = 0.0) -> np.ndarray:
    """Front index (0 = non-dominated) of every point under the constrained relation."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    n = len(F)
    if V is None:
        V = np.zeros(n)
    D = dominance_matrix(F, V, epsilon)
    counts = D.sum(axis=0)
    ranks = np.full(n, -1, dtype=int)
    current = np.flatnonzero(counts == 0)
    r = 0
    while current.size:
        ranks[current] = r
        counts = counts - D[current].sum(axis=0)
        counts[ranks >= 0] = -1
        current = np.flatnonzero(counts == 0)
        r += 1
    return ranks


def crowding_distance(F: np.ndarray) -> np.ndarray:
    """Crowding distance within one front; boundary points get ``inf``."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    n, m = F.shape
    d = np.zeros(n)
    if n <= 2:
        d[:] = np.inf
        return d
    for j in range(m):
        order = np.argsort(F[:, j], kind="stable")
        span = F[order[-1], j] - F[order[0], j]
        d[order[0]] = d[order[-1]] = np.inf
        if span > 0:
            d[order[1:-1]] += (F[order[2:], j] - F[order[:-2], j]) / span
    return d


def _rank_and_crowd(F, V, epsilon):
    ranks = nondominated_sort(F, V, epsilon)
    crowd = np.zeros(len(F))
    for r in np.unique(ranks):
        idx = np.flatnonzero(ranks == r)
        crowd[idx] = crowding_distance(F[idx])
    return ranks, crowd


def _survivors(F, V, epsilon, n):
    ranks, crowd = _rank_and_crowd(F, V, epsilon)
    # rank ascending, crowding descending, index ascending
    order = np.lexsort((np.arange(len(F)), -crowd, ranks))
    return np.sort(order[:n])


def sbx(p1, p2, lower, upper, eta, prob, rng):
    """Bounded simulated binary crossover; returns two children."""
    c1, c2 = p1.copy(), p2.copy()
    if rng.random() > prob:
        return c1, c2
    n = p1.size
    swap = rng.random(n) <= 0.5
    u = rng.random(n)
    for i in np.flatnonzero(swap & (np.abs(p1 - p2) > 1e-14)):
        y1, y2 = min(p1[i], p2[i]), max(p1[i], p2[i])
        lo, hi = lower[i], upper[i]
        span = y2 - y1
        beta = 1.0 + 2.0 * (y1 - lo) / span
        alpha = 2.0 - beta ** -(eta + 1.0)
        betaq = (u[i] * alpha) ** (1.0 / (eta + 1.0)) if u[i] <= 1.0 / alpha else (1.0 / (2.0 - u[i] * alpha)) ** (1.0 / (eta + 1.0))
        a = 0.5 * ((y1 + y2) - betaq * span)
        beta = 1.0 + 2.0 * (hi - y2) / span
        alpha = 2.0 - beta ** -(eta + 1.0)
        betaq = (u[i] * alpha) ** (1.0 / (eta + 1.0)) if u[i] <= 1.0 / alpha else (1.0 / (2.0 - u[i] * alpha)) ** (1.0 / (eta + 1.0))
        b = 0.5 * ((y1 + y2) + betaq * span)
        a, b = min(max(a, lo), hi), min(max(b, lo), hi)
        if rng.random() <= 0.5:
            a, b = b, a
        c1[i], c2[i] = a, b
    return c1, c2


def polynomial_mutation(x, lower, upper, eta, rate, rng):
    y = x.copy()
    span = upper - lower
    hit = rng.random(x.size) < rate
    u = rng.random(x.size)
    for i in np.flatnonzero(hit & (span > 0)):
        d1 = (y[i] - lower[i]) / span[i]
        d2 = (upper[i] - y[i]) / span[i]
        power = 1.0 / (eta + 1.0)
        if u[i] < 0.5:
            val = 2.0 * u[i] + (1.0 - 2.0 * u[i]) * (1.0 - d1) ** (eta + 1.0)
            dq = val**power - 1.0
        else:
            val = 2.0 * (1.0 - u[i]) + 2.0 * (u[i] - 0.5) * (1.0 - d2) ** (eta + 1.0)
            dq = 1.0 - val**power
        y[i] = min(max(y[i] + dq * span[i], lower[i]), upper[i])
    return y


@dataclass
class Population:
    X: np.ndarray
    F: np.ndarray
    V: np.ndarray


@dataclass
class CmooResult:
    X: np.ndarray  # archive positions, (k, n)
    F: np.ndarray  # archive objectives, (k, m)
    evaluations: int
    best_violation: float
    history: list[dict] = field(default_factory=list)
    main: Population | None = None
    aux: Population | None = None

    @property
    def empty(self) -> bool:
        return len(self.F) == 0


class _Budgeted:
    """Deduplicating, counting wrapper around the objective function."""

    def __init__(self, objectives: Objectives, budget: int):
        self.objectives = objectives
        self.budget = budget
        self.used = 0
        self._cache: dict[bytes, tuple[np.ndarray, float]] = {}

    @property
    def remaining(self) -> int:
        return self.budget - self.used

    def __call__(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        keys = [x.tobytes() for x in X]
        new = {}
        for k, x in zip(keys, X):
            if k not in self._cache and k not in new:
                new[k] = x
        if new:
            F, V = self.objectives(np.array(list(new.values())))
            for k, f, v in zip(new, np.atleast_2d(F), np.asarray(V)):
                self._cache[k] = (np.asarray(f, dtype=float), float(v))
            self.used += len(new)
        F = np.array([self._cache[k][0] for k in keys])
        V = np.array([self._cache[k][1] for k in keys])
        return F, V


def _breed(pop: Population, ranks, crowd, count, lower, upper, config, rng):
    n = len(pop.X)

    def tournament():
        a, b = rng.integers(n, size=2)
        if (ranks[b], -crowd[b]) < (ranks[a], -crowd[a]):
            return b
        return a

    rate = 1.0 / lower.size
    children = []
    while len(children) < count:
        p1, p2 = pop.X[tournament()], pop.X[tournament()]
        c1, c2 = sbx(p1, p2, lower, upper, config.eta_crossover, config.crossover_probability, rng)
        children.append(polynomial_mutation(c1, lower, upper, config.eta_mutation, rate, rng))
        if len(children) < count:
            children.append(polynomial_mutation(c2, lower, upper, config.eta_mutation, rate, rng))
    return np.array(children)


def _merge_archive(arch_X, arch_F, X, F, V):
    """Add the feasible rows of ``(X, F)`` to a non-dominated archive."""
    feas = V == 0.0
    if not np.any(feas):
        return arch_X, arch_F
    cX, cF = X[feas], F[feas]
    keep = nondominated_mask(cF)
    cX, cF = cX[keep], cF[keep]
    if len(arch_F):
        # candidates dominated by, or equal to, an archived point are dropped
        geq = np.all(arch_F[:, None, :] >= cF[None, :, :], axis=2)
        cand_ok = ~np.any(geq, axis=0)
        cX, cF = cX[cand_ok], cF[cand_ok]
        if len(cF):
            dom = np.all(cF[:, None, :] >= arch_F[None, :, :], axis=2) & np.any(cF[:, None, :] > arch_F[None, :, :], axis=2)
            alive = ~np.any(dom, axis=0)
            arch_X, arch_F = arch_X[alive], arch_F[alive]
    return np.vstack([arch_X, cX]), np.vstack([arch_F, cF])


def cmoo_optimize(
    objectives: Objectives,
    lower,
    upper,
    config: MooConfig,
    reference_point=None,
    progress: Callable[[dict], None] | None = None,
) -> CmooResult:
    """Approximate the feasible Pareto front of ``objectives`` inside the box.

    ``objectives`` maps ``(k, n)`` positions to ``(values (k, m), violations (k,))``.
    ``reference_point`` is only used for the archive hypervolume in progress records.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n, dim, seed = config.population, lower.size, config.seed
    evaluate = _Budgeted(objectives, config.max_evaluations)

    def initial(pop_id):
        rng = stream(seed, _INIT, pop_id)
        X = lower + rng.random((n, dim)) * (upper - lower)
        if config.seed_lower_corner:
            X[0] = lower
        return X

    X_main, X_aux = initial(_MAIN), initial(_AUX)
    F, V = evaluate(np.vstack([X_main, X_aux]))
    main = Population(X_main, F[:n], V[:n])
    aux = Population(X_aux, F[n:], V[n:])
    eps0 = float(V.max())
    m = F.shape[1]
    arch_X, arch_F = _merge_archive(np.empty((0, dim)), np.empty((0, m)), np.vstack([X_main, X_aux]), F, V)
    best_violation = float(V.min())

    history: list[dict] = []
    generation = 0

    def record(eps):
        hv = None
        if reference_point is not None and m <= 3 and np.all(arch_F >= reference_point):
            hv = hypervolume(arch_F, reference_point)
        rec = {
            "generation": generation,
            "archive_size": int(len(arch_F)),
            "archive_hypervolume": hv,
            "best_violation": best_violation,
            "epsilon": eps,
            "evaluations": evaluate.used,
        }
        history.append(rec)
        if progress is not None:
            progress(rec)

    eps = epsilon_schedule(eps0, evaluate.used, config.max_evaluations, config.relaxation_decay)
    record(eps)
    per_pop = n // 2
    stalled = 0
    while evaluate.remaining > 0 and stalled < MAX_STALLED_GENERATIONS:
        generation += 1
        rng = stream(seed, _MATING, generation)
        r_main, c_main = _rank_and_crowd(main.F, main.V, 0.0)
        r_aux, c_aux = _rank_and_crowd(aux.F, aux.V, eps)
        kids = np.vstack(
            [
                _breed(main, r_main, c_main, per_pop, lower, upper, config, rng),
                _breed(aux, r_aux, c_aux, per_pop, lower, upper, config, rng),
            ]
        )
        kids = kids[: evaluate.remaining]
        before = evaluate.used
        kF, kV = evaluate(kids)
        # a converged population can breed only already-evaluated children
        stalled = stalled + 1 if evaluate.used == before else 0
        best_violation = min(best_violation, float(kV.min()))
        arch_X, arch_F = _merge_archive(arch_X, arch_F, kids, kF, kV)

        eps = epsilon_schedule(eps0, evaluate.used, config.max_evaluations, config.relaxation_decay)
        for pop, e in ((main, 0.0), (aux, eps)):
            X = np.vstack([pop.X, kids])
            F = np.vstack([pop.F, kF])
            V = np.concatenate([pop.V, kV])
            keep = _survivors(F, V, e, n)
            pop.X, pop.F, pop.V = X[keep], F[keep], V[keep]
        record(eps)

    if not len(arch_F):
        log.warning("no feasible solution within %d evaluations (best violation %.3g)", evaluate.used, best_violation)
    return CmooResult(arch_X, arch_F, evaluate.used, best_violation, history, main, aux)
