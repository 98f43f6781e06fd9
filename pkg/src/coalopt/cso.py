"""Constrained competitive swarm optimizer (maximization).

Each generation the swarm is split into random pairs. The winner of a pair
survives unchanged; the loser learns from the winner and from the swarm mean:

    v_l <- r1 * v_l + r2 * (x_w - x_l) + phi * r3 * (mean - x_l)
    x_l <- clip(x_l + v_l, lower, upper)

Pairs are compared with feasibility rules: feasible beats infeasible, two
infeasible individuals compare by violation, two feasible ones by fitness.
Only the losers need evaluating, so a generation costs ``N / 2`` evaluations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

log = logging.getLogger(__name__)

Fitness = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    population: int = 50
    max_evaluations: int = 5000
    seed: int = 0
    phi: float = 0.1
    seed_lower_corner: bool = True

    def __post_init__(self):
        if self.population < 4 or self.population % 2:
            raise ConfigurationError(f"population must be even and >= 4, got {self.population}")
        if self.max_evaluations < self.population:
            raise ConfigurationError(
                f"max_evaluations ({self.max_evaluations}) must cover the initial population ({self.population})"
            )
        if not 0.0 <= self.phi <= 1.0:
            raise ConfigurationError(f"phi must lie in [0, 1], got {self.phi}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


def stream(seed: int, *tags: int) -> np.random.Generator:
    """Counter-based generator keyed by the seed and integer tags."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *tags])))


def better(f_a: float, v_a: float, f_b: float, v_b: float) -> bool:
    """True if ``a`` strictly beats ``b`` under the feasibility rules."""
    if v_a == 0.0 and v_b == 0.0:
        return f_a > f_b
    if v_a == 0.0 or v_b == 0.0:
        return v_a == 0.0
    return v_a < v_b


@dataclass
class Individual:
    position: np.ndarray
    velocity: np.ndarray
    fitness: float | None = None
    violation: float | None = None

    @property
    def evaluated(self) -> bool:
        return self.fitness is not None


@dataclass
class CsoResult:
    best: Individual
    history: list[dict] = field(default_factory=list)
    evaluations: int = 0
    population: list[Individual] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.best.violation == 0.0


_INIT, _PAIRING, _UPDATE = 0, 1, 2


def cso_maximize(
    fitness: Fitness,
    lower,
    upper,
    config: OptimizerConfig,
    progress: Callable[[dict], None] | None = None,
) -> CsoResult:
    """Maximize ``fitness`` subject to its violation output inside the box.

    ``fitness`` maps an ``(k, n)`` array of positions to ``(values, violations)``,
    both of shape ``(k,)``; a violation of exactly zero means feasible.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != upper.shape or lower.ndim != 1 or np.any(lower > upper):
        raise ConfigurationError("bounds must be 1-D arrays with lower <= upper")
    n, dim = config.population, lower.size
    seed = config.seed

    swarm = []
    for i in range(n):
        if i == 0 and config.seed_lower_corner:
            x = lower.copy()
        else:
            x = lower + stream(seed, _INIT, i).random(dim) * (upper - lower)
        swarm.append(Individual(x, np.zeros(dim)))

    used = 0
    best: Individual | None = None
    history: list[dict] = []
    generation = 0
    while True:
        pending = [ind for ind in swarm if not ind.evaluated]
        f, v = fitness(np.array([ind.position for ind in pending]))
        used += len(pending)
        for ind, fi, vi in zip(pending, np.asarray(f, dtype=float), np.asarray(v, dtype=float)):
            ind.fitness, ind.violation = float(fi), float(vi)
            if best is None or better(ind.fitness, ind.violation, best.fitness, best.violation):
                best = Individual(ind.position.copy(), ind.velocity.copy(), ind.fitness, ind.violation)
        record = {
            "generation": generation,
            "best_value": best.fitness,
            "best_violation": best.violation,
            "evaluations": used,
        }
        history.append(record)
        if progress is not None:
            progress(record)
        if used + n // 2 > config.max_evaluations:
            break

        generation += 1
        order = stream(seed, _PAIRING, generation).permutation(n)
        mean = np.mean([ind.position for ind in swarm], axis=0)
        for a, b in zip(order[::2], order[1::2]):
            sa, sb = swarm[a], swarm[b]
            if better(sb.fitness, sb.violation, sa.fitness, sa.violation):
                winner, loser, li = sb, sa, a
            else:
                winner, loser, li = sa, sb, b
            r1, r2, r3 = stream(seed, _UPDATE, generation, li).random((3, dim))
            vel = r1 * loser.velocity + r2 * (winner.position - loser.position) + config.phi * r3 * (mean - loser.position)
            swarm[li] = Individual(np.clip(loser.position + vel, lower, upper), vel)

    log.debug("cso finished after %d generations, %d evaluations", generation, used)
    return CsoResult(best, history, used, swarm)
