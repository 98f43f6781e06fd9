"""Multi-structure study: fronts for every coalition structure, selections, comparison."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .cmoo import MooConfig
from .coalition import AgentSet, Coalition, CoalitionError, CoalitionStructure, enumerate_structures, is_grand_coalition
from .config import ConfigError, ScenarioConfig, parse_criterion
from .cso import OptimizerConfig
from .fronts import cmoo_front, solve_grand, verify_grand_on_front, wsm_front
from .objective import ScenarioBounds
from .pareto import FrontPoint, ParetoFront, select_max_agent, select_max_total, weight_grid
from .reservoir import LinearResponse, ReservoirModel

log = logging.getLogger(__name__)

METHODS = ("wsm", "cmoo")


class StudyError(ValueError):
    pass


@dataclass
class StudyPlan:
    agents: AgentSet
    structures: list[CoalitionStructure]
    methods: list[str]
    soo_config: OptimizerConfig
    moo_config: MooConfig
    weight_increments: dict[int, float]
    criteria: list[str]
    max_structures: int = 64

    def validate(self) -> None:
        if not self.structures:
            raise StudyError("a study needs at least one coalition structure")
        if len(self.structures) > self.max_structures:
            raise StudyError(
                f"{len(self.structures)} coalition structures exceed the limit of {self.max_structures}; "
                "deny unrealistic coalitions or list the structures of interest explicitly"
            )
        if not self.methods or any(m not in METHODS for m in self.methods):
            raise StudyError(f"methods must be a non-empty subset of {list(METHODS)}, got {self.methods}")
        if not self.criteria:
            raise StudyError("a study needs at least one selection criterion")
        for crit in self.criteria:
            parse_criterion(crit, self.agents)
        for cs in self.structures:
            if cs.n_agents != self.agents.count:
                raise StudyError(f"structure {cs.canonical_key} does not cover {self.agents.count} agents")
            if "wsm" in self.methods and cs.m > 1 and cs.m not in self.weight_increments:
                raise StudyError(f"no weight increment configured for {cs.m} coalitions")


@dataclass
class Selection:
    criterion: str
    structure: CoalitionStructure
    method: str
    point: FrontPoint


@dataclass
class StudyReport:
    agents: AgentSet
    bounds: ScenarioBounds
    grand: FrontPoint | None
    grand_record: dict
    fronts: dict[tuple[tuple[int, ...], str], ParetoFront] = field(default_factory=dict)
    selections: list[Selection] = field(default_factory=list)
    grand_checks: list[dict] = field(default_factory=list)
    ledger: list[dict] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not self.errors

    @property
    def total_evaluations(self) -> int:
        return sum(row["evaluations"] for row in self.ledger)

    def per_well_totals(self, point: FrontPoint) -> np.ndarray:
        return point.rates.sum(axis=1) * self.bounds.interval_length

    def table(self) -> list[dict]:
        """Comparison rows: criterion x structure -> totals, one row per selection."""
        rows = []
        for sel in self.selections:
            wells = self.per_well_totals(sel.point)
            rows.append(
                {
                    "criterion": sel.criterion,
                    "structure": sel.structure.label(self.agents),
                    "method": sel.method,
                    "total_mt": math.fsum(sel.point.values),
                    "coalition_values_mt": [float(v) for v in sel.point.values],
                    "well_totals_mt": [float(v) for v in wells],
                    "max_rel_pressure": sel.point.max_rel_pressure,
                }
            )
        return rows


def plan_from_config(config: ScenarioConfig, seed: int | None = None, methods: list[str] | None = None) -> StudyPlan:
    """Study plan from the ``study`` block; ``seed`` and ``methods`` override the config."""
    agents = config.agent_set()
    st = config.study
    try:
        if st.structures == "all":
            structures = enumerate_structures(agents, deny=[_coalition(text, agents) for text in st.deny])
        else:
            structures = [CoalitionStructure.parse(text, agents) for text in st.structures]
    except CoalitionError as exc:
        raise ConfigError(f"study: {exc}") from None
    increments = {cs.m: config.weight_increment(cs.m) for cs in structures if cs.m > 1}
    return StudyPlan(
        agents,
        structures,
        list(methods or st.methods),
        config.soo_config(seed),
        config.moo_config(seed),
        increments,
        list(st.criteria),
        int(st.max_structures),
    )


def _coalition(text: str, agents: AgentSet) -> Coalition:
    text = text.strip()
    if not (text.startswith("{") and text.endswith("}")):
        raise ConfigError(f"malformed coalition {text!r}")
    names = [s.strip() for s in text[1:-1].split(",") if s.strip()]
    return Coalition(tuple(sorted(agents.index(n) for n in names)))


def _select(criterion: str, agents: AgentSet, front: ParetoFront) -> FrontPoint:
    kind, agent = parse_criterion(criterion, agents)
    return select_max_total(front) if kind == "max_total" else select_max_agent(front, agent)


def run_study(
    plan: StudyPlan,
    model: ReservoirModel,
    bounds: ScenarioBounds,
    threads: int = 1,
    grand_tolerance: float = 0.02,
) -> StudyReport:
    """Solve the grand coalition once, then build a front per structure and method.

    Failures of individual sub-runs are recorded in ``report.errors`` and the
    study carries on.
    """
    plan.validate()
    if model.n_wells != plan.agents.count:
        raise StudyError(f"model has {model.n_wells} wells for {plan.agents.count} agents")
    response = LinearResponse(model, bounds.num_intervals, bounds.interval_length)

    grand, grand_record = solve_grand(model, bounds, plan.soo_config, response)
    report = StudyReport(plan.agents, bounds, grand, grand_record)
    report.ledger.append({"structure": "grand", "method": "soo", "run": 0, "evaluations": grand_record["evaluations"]})
    if grand is None:
        report.errors.append({"structure": "grand", "method": "soo", "error": "no feasible grand-coalition schedule"})

    for cs in plan.structures:
        label = cs.label(plan.agents)
        if is_grand_coalition(cs):
            if grand is not None:
                for crit in plan.criteria:
                    report.selections.append(Selection(crit, cs, "soo", grand))
            continue
        for method in plan.methods:
            try:
                if method == "wsm":
                    grid = weight_grid(cs.m, plan.weight_increments[cs.m])
                    front = wsm_front(cs, model, bounds, grid, plan.soo_config, response, threads)
                    for rec in front.records:
                        report.ledger.append(
                            {"structure": label, "method": method, "run": rec["index"], "evaluations": rec["evaluations"]}
                        )
                else:
                    front = cmoo_front(cs, model, bounds, plan.moo_config, response)
                    report.ledger.append(
                        {"structure": label, "method": method, "run": 0, "evaluations": front.diagnostics["evaluations"]}
                    )
            except Exception as exc:  # noqa: BLE001 - a failed sub-run must not abort the study
                log.exception("structure %s, method %s failed", label, method)
                report.errors.append({"structure": label, "method": method, "error": f"{type(exc).__name__}: {exc}"})
                continue
            report.fronts[(cs.canonical_key, method)] = front
            if not front.points:
                report.errors.append(
                    {
                        "structure": label,
                        "method": method,
                        "error": f"empty front (best violation {front.diagnostics.get('best_violation', float('nan')):.3g})",
                    }
                )
                continue
            for crit in plan.criteria:
                report.selections.append(Selection(crit, cs, method, _select(crit, plan.agents, front)))
            if grand is not None:
                ok, gap = verify_grand_on_front(front, grand, bounds.interval_length, grand_tolerance)
                report.grand_checks.append({"structure": label, "method": method, "on_front": ok, "gap_mt": gap})
    return report
