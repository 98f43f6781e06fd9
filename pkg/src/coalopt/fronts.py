"""Front construction for one coalition structure.

``wsm_front`` runs one competitive-swarm maximization per weight vector of a
simplex grid; ``cmoo_front`` runs the two-population evolutionary optimizer.
Both return a :class:`~coalopt.pareto.ParetoFront` of feasible, mutually
non-dominated points carrying their full schedules.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from .cmoo import MooConfig, cmoo_optimize
from .coalition import CoalitionStructure, grand_coalition
from .cso import OptimizerConfig, cso_maximize
from .objective import Evaluator, ScenarioBounds
from .pareto import FrontPoint, ParetoFront, filter_nondominated
from .reservoir import LinearResponse, ReservoirModel

log = logging.getLogger(__name__)

_WSM, _CMOO = 1, 2


def derive_seed(seed: int, *tags: int) -> int:
    """64-bit seed for a sub-run, keyed by integer tags."""
    state = np.random.SeedSequence([seed, *tags]).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])


def structure_tag(structure: CoalitionStructure) -> int:
    """Integer encoding of a structure's restricted-growth key."""
    tag = 0
    for k in structure.canonical_key:
        tag = tag * (structure.n_agents + 1) + k
    return tag * 64 + structure.n_agents


def weight_seed(seed: int, structure: CoalitionStructure, index: int) -> int:
    return derive_seed(seed, _WSM, structure_tag(structure), index)


def cmoo_seed(seed: int, structure: CoalitionStructure) -> int:
    return derive_seed(seed, _CMOO, structure_tag(structure))


def reference_point(structure: CoalitionStructure, bounds: ScenarioBounds) -> np.ndarray:
    """Coalition values of the all-minimum schedule; every in-bounds schedule weakly dominates it."""
    sizes = np.array([len(c) for c in structure.coalitions], dtype=float)
    return sizes * bounds.rate_min * bounds.duration


def _point(evaluator: Evaluator, x: np.ndarray, method: str, weights=None) -> FrontPoint:
    report = evaluator.evaluate(x)
    return FrontPoint(
        values=np.array(report.values),
        rates=x.reshape(evaluator.model.n_wells, -1).copy(),
        method=method,
        weights=None if weights is None else tuple(float(w) for w in weights),
        max_rel_pressure=report.max_rel_pressure,
    )


def _run_weight(args):
    index, weights, structure, model, bounds, response, config = args
    evaluator = Evaluator(model, bounds, structure, response=response)
    lower, upper = evaluator.box()
    result = cso_maximize(evaluator.scalarized(weights), lower, upper, config)
    evaluated = [ind.position for ind in result.population if ind.fitness is not None]
    mean_values = evaluator.values(np.mean(evaluated, axis=0)[None, :])[0]
    record = {
        "index": index,
        "weights": [float(w) for w in weights],
        "seed": config.seed,
        "evaluations": evaluator.n_evaluations,
        "optimizer_evaluations": result.evaluations,
        "feasible": result.feasible,
        "best_violation": result.best.violation,
        "best_values": evaluator.values(result.best.position[None, :])[0].tolist(),
        "population_mean_values": mean_values.tolist(),
    }
    point = _point(evaluator, result.best.position, "wsm", weights) if result.feasible else None
    return point, record


def wsm_front(
    structure: CoalitionStructure,
    model: ReservoirModel,
    bounds: ScenarioBounds,
    grid: list[tuple[float, ...]],
    soo_config: OptimizerConfig,
    response: LinearResponse | None = None,
    threads: int = 1,
) -> ParetoFront:
    """Weighted-sum front: one constrained CSO run per weight vector.

    Each weight's run gets its own seed derived from ``soo_config.seed``, the
    structure and the weight index, so results do not depend on ``threads``.
    """
    if response is None:
        response = LinearResponse(model, bounds.num_intervals, bounds.interval_length)
    jobs = [
        (i, w, structure, model, bounds, response, replace(soo_config, seed=weight_seed(soo_config.seed, structure, i)))
        for i, w in enumerate(grid)
    ]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_weight, jobs))
    else:
        results = [_run_weight(job) for job in jobs]

    points, records = [], []
    for point, record in results:
        records.append(record)
        if point is None:
            log.warning("weight %s found no feasible schedule (best violation %.3g)", record["weights"], record["best_violation"])
        else:
            points.append(point)
    front = ParetoFront(filter_nondominated(points), structure, records)
    front.diagnostics = {
        "method": "wsm",
        "evaluations": sum(r["evaluations"] for r in records),
        "candidates": len(points),
        "infeasible_weights": [r["weights"] for r in records if not r["feasible"]],
    }
    return front


def solve_grand(
    model: ReservoirModel,
    bounds: ScenarioBounds,
    soo_config: OptimizerConfig,
    response: LinearResponse | None = None,
) -> tuple[FrontPoint | None, dict]:
    """Grand-coalition optimum by a single constrained CSO run on the total."""
    structure = grand_coalition(model.n_wells)
    evaluator = Evaluator(model, bounds, structure, response=response)
    config = replace(soo_config, seed=weight_seed(soo_config.seed, structure, 0))
    lower, upper = evaluator.box()
    result = cso_maximize(evaluator.scalarized([1.0]), lower, upper, config)
    record = {
        "seed": config.seed,
        "evaluations": evaluator.n_evaluations,
        "optimizer_evaluations": result.evaluations,
        "feasible": result.feasible,
        "best_violation": result.best.violation,
        "history": result.history,
    }
    if not result.feasible:
        return None, record
    return _point(evaluator, result.best.position, "soo", (1.0,)), record


def cmoo_front(
    structure: CoalitionStructure,
    model: ReservoirModel,
    bounds: ScenarioBounds,
    moo_config: MooConfig,
    response: LinearResponse | None = None,
) -> ParetoFront:
    evaluator = Evaluator(model, bounds, structure, response=response)
    config = replace(moo_config, seed=cmoo_seed(moo_config.seed, structure))
    lower, upper = evaluator.box()
    result = cmoo_optimize(evaluator.objectives, lower, upper, config, reference_point=reference_point(structure, bounds))
    points = [_point(evaluator, x, "cmoo") for x in result.X]
    front = ParetoFront(points, structure, records=result.history)
    front.diagnostics = {
        "method": "cmoo",
        "seed": config.seed,
        "evaluations": evaluator.n_evaluations,
        "optimizer_evaluations": result.evaluations,
        "best_violation": result.best_violation,
        "empty": result.empty,
    }
    return front


def decompose(point: FrontPoint, structure: CoalitionStructure, interval_length: float) -> np.ndarray:
    """Coalition values of ``point``'s schedule under another structure."""
    per_well = point.rates.sum(axis=1) * interval_length
    return np.array([per_well[list(c.members)].sum() for c in structure.coalitions])


def verify_grand_on_front(
    front: ParetoFront,
    grand_point: FrontPoint,
    interval_length: float,
    tolerance: float = 0.02,
) -> tuple[bool, float]:
    """Check that the grand-coalition schedule sits on ``front``.

    The gap [Mt] is the larger of two margins: how far the grand point's
    coalition values exceed the closest front point that should cover them,
    and how far any front point dominates them. The check passes when the
    gap is within ``tolerance`` times the grand total.
    """
    g = decompose(grand_point, front.structure, interval_length)
    F = front.objective_matrix()
    if not len(F):
        return False, float(g.sum())
    coverage = float(np.min(np.max(np.maximum(g[None, :] - F, 0.0), axis=1)))
    dominating = np.all(F >= g[None, :], axis=1)
    domination = float(np.max((F - g[None, :])[dominating])) if np.any(dominating) else 0.0
    gap = max(coverage, domination)
    return gap <= tolerance * float(g.sum()), gap
