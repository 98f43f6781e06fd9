"""Built-in validation suites against independent oracles.

* ``theis``: single-well pressure rise vs. the exponential-integral solution.
* ``superposition``: two-well run vs. the sum of two single-well runs.
* ``oracle-front``: WSM-CSO front on a reduced two-well, one-interval problem
  vs. the non-dominated set of an exhaustive 21 x 21 rate lattice, evaluated
  with direct simulations (not the precomputed response used by the optimizer).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .coalition import singletons
from .config import ScenarioConfig
from .cso import OptimizerConfig
from .fronts import wsm_front
from .objective import ScenarioBounds
from .pareto import nondominated_mask, weight_grid
from .reservoir import (
    InjectionSchedule,
    ReservoirModel,
    WellSpec,
    mass_rate_to_volumetric,
    max_relative_pressure,
    simulate,
    theis_oracle,
)

log = logging.getLogger(__name__)

SUITES = ("theis", "superposition", "oracle-front")

THEIS_TOLERANCE = 0.05
SUPERPOSITION_TOLERANCE = 1e-8


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    limit: float
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.value:.6g} (limit {self.limit:g})"


def theis_model(config: ScenarioConfig, n: int = 81, offset: int = 10, substeps: int = 60) -> tuple[ReservoirModel, tuple[int, int]]:
    """Square homogeneous grid with a centred well, built from the scenario's rock and fluid properties."""
    base = config.build_model()
    k = np.unique(base.permeability)
    phi = np.unique(base.porosity)
    if k.size != 1 or phi.size != 1:
        raise ValueError("the Theis suite needs homogeneous permeability and porosity")
    c = n // 2
    pob = float(base.overburden_pressure.mean())
    model = ReservoirModel(
        nx=n,
        ny=n,
        dx=base.dx,
        dy=base.dx,
        thickness=base.thickness,
        permeability=float(k[0]),
        porosity=float(phi[0]),
        total_compressibility=base.total_compressibility,
        viscosity=base.viscosity,
        initial_pressure=config.reservoir.initial_fraction * pob,
        overburden_pressure=pob,
        wells=[WellSpec(0, (c, c))],
        co2_density=base.co2_density,
        substeps_per_interval=substeps,
    )
    return model, (c + offset, c)


def check_theis(config: ScenarioConfig, rate: float = 1.0, duration: float = 3.0) -> CheckResult:
    """Relative error at an observation cell 10 cells from the well, before boundary influence.

    Times are restricted to the window where the signal is developed
    (``u <= 1`` at the observer) and the nearest mirror well across a
    no-flow boundary adds less than 0.1 % of the signal.
    """
    model, (oi, oj) = theis_model(config)
    hist = simulate(model, InjectionSchedule([[rate]], duration))
    wi, wj = model.wells[0].cell
    r = math.hypot((oi - wi) * model.dx, (oj - wj) * model.dy)
    # mirror of the well across the closest boundary, seen from the observer
    r_image = 2 * (model.nx - 0.5 - wi) * model.dx - r
    q = float(mass_rate_to_volumetric(rate, model.co2_density))
    k, H, mu = float(model.permeability[0, 0]), model.thickness, model.viscosity
    phi, ct = float(model.porosity[0, 0]), model.total_compressibility
    p0 = model.initial_pressure[oi, oj]
    worst, checked = 0.0, []
    for t, p in zip(hist.times[1:], hist.pressures[1:]):
        u = phi * mu * ct * r * r / (4 * k * t)
        analytic = theis_oracle(q, k, H, mu, phi, ct, r, t)
        image = theis_oracle(q, k, H, mu, phi, ct, r_image, t)
        if u > 1.0 or image > 1e-3 * analytic:
            continue
        err = abs((p[oi, oj] - p0) / analytic - 1.0)
        checked.append((float(t), float(err)))
        worst = max(worst, err)
    if not checked:
        return CheckResult("theis", False, math.inf, THEIS_TOLERANCE, {"reason": "no comparison time in window"})
    return CheckResult(
        "theis",
        worst <= THEIS_TOLERANCE,
        worst,
        THEIS_TOLERANCE,
        {"radius_m": r, "times_s": [t for t, _ in checked], "errors": [e for _, e in checked]},
    )


def check_superposition(config: ScenarioConfig, rate: float = 1.0) -> CheckResult:
    model = config.build_model()
    bounds = config.bounds()
    if model.n_wells < 2:
        raise ValueError("the superposition suite needs at least two wells")
    shape = (model.n_wells, bounds.num_intervals)

    def run(active):
        rates = np.zeros(shape)
        rates[list(active)] = rate
        return simulate(model, InjectionSchedule(rates, bounds.interval_length)).pressures - model.initial_pressure

    both = run([0, 1])
    summed = run([0]) + run([1])
    err = float(np.max(np.abs(both - summed)) / np.max(np.abs(both)))
    return CheckResult("superposition", err <= SUPERPOSITION_TOLERANCE, err, SUPERPOSITION_TOLERANCE)


def reduced_two_well(config: ScenarioConfig) -> tuple[ReservoirModel, ScenarioBounds]:
    """First two wells of the scenario, a single injection interval of the configured length."""
    model = config.build_model()
    wells = sorted(model.wells, key=lambda w: w.agent_index)[:2]
    reduced = replace(model, wells=list(wells))
    b = config.bounds()
    return reduced, ScenarioBounds(b.rate_min, b.rate_max, 1, b.interval_length)


def lattice_front(model: ReservoirModel, bounds: ScenarioBounds, n: int = 21):
    """Exhaustive lattice evaluation with direct simulations; returns (front values, cell size, all results)."""
    grid = np.linspace(bounds.rate_min, bounds.rate_max, n)
    values, feasible, mrp = [], [], []
    for a in grid:
        for b in grid:
            hist = simulate(model, InjectionSchedule([[a], [b]], bounds.interval_length))
            m = max_relative_pressure(hist, model)
            values.append((a * bounds.interval_length, b * bounds.interval_length))
            mrp.append(m)
            feasible.append(m <= 0.9)
    values = np.array(values)
    feasible = np.array(feasible)
    F = values[feasible]
    cell = (grid[1] - grid[0]) * bounds.interval_length
    return F[nondominated_mask(F)], cell, {"values": values, "max_rel_pressure": np.array(mrp)}


def check_oracle_front(
    config: ScenarioConfig,
    increment: float = 0.1,
    population: int = 20,
    max_evaluations: int = 1000,
    seed: int | None = None,
) -> CheckResult:
    """Every lattice-front point must be covered, within one lattice cell, by a WSM-CSO point."""
    model, bounds = reduced_two_well(config)
    lattice, cell, _ = lattice_front(model, bounds)
    structure = singletons(2)
    soo = OptimizerConfig(population, max_evaluations, config.seed if seed is None else seed, config.soo.phi)
    front = wsm_front(structure, model, bounds, weight_grid(2, increment), soo)
    W = front.objective_matrix()
    if not len(W):
        return CheckResult("oracle-front", False, math.inf, 1.0, {"reason": "empty WSM front"})
    # shortfall of the best-covering WSM point, in lattice cells
    shortfall = np.max((lattice[:, None, :] - W[None, :, :]) / cell, axis=2)
    per_point = np.maximum(shortfall.min(axis=1), 0.0)
    worst = float(per_point.max())
    return CheckResult(
        "oracle-front",
        worst <= 1.0,
        worst,
        1.0,
        {
            "lattice_front": lattice.tolist(),
            "wsm_front": W.tolist(),
            "cell_mt": float(cell),
            "wsm_evaluations": front.diagnostics["evaluations"],
            "weights": len(front.records),
        },
    )


def run_suite(config: ScenarioConfig, suite: str) -> list[CheckResult]:
    names = SUITES if suite == "all" else (suite,)
    checks = {"theis": check_theis, "superposition": check_superposition, "oracle-front": check_oracle_front}
    results = []
    for name in names:
        if name not in checks:
            raise ValueError(f"unknown validation suite {name!r}; choose from {', '.join(SUITES)} or all")
        results.append(checks[name](config))
    return results
