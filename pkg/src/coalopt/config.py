"""Scenario configuration: JSON parsing, validation and the default desk scenario."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .cmoo import MooConfig
from .coalition import AgentSet, CoalitionError
from .cso import ConfigurationError, OptimizerConfig
from .objective import ScenarioBounds, ValidationError
from .reservoir import MILLIDARCY, ModelError, ReservoirModel, WellSpec

CONFIG_VERSION = 1
GRAVITY = 9.81


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration."""


@dataclass
class ReservoirSection:
    nx: int = 50
    ny: int = 50
    dx: float = 1500.0
    dy: float = 1500.0
    thickness: float = 100.0
    permeability_md: Any = 200.0  # scalar or nx-by-ny nested list
    porosity: Any = 0.2
    total_compressibility: float = 1e-9
    viscosity: float = 6e-4
    co2_density: float = 700.0
    substeps_per_interval: int = 12
    top_depth: float = 1000.0  # [m]
    dip_x: float = 10.0  # depth increase per cell along i [m]
    dip_y: float = 0.0
    overburden_density: float = 2300.0  # [kg/m^3]
    initial_fraction: float = 0.75
    wells: list = field(
        default_factory=lambda: [
            {"agent": "W1", "cell": [15, 18]},
            {"agent": "W2", "cell": [24, 30]},
            {"agent": "W3", "cell": [36, 20]},
        ]
    )


@dataclass
class ScheduleSection:
    num_intervals: int = 5
    interval_length: float = 3.0  # [yr]
    rate_min: float = 0.24  # [Mt/yr]
    rate_max: float = 7.0


@dataclass
class SooSection:
    population: int = 50
    max_evaluations: int = 5000
    phi: float = 0.1


@dataclass
class MooSection:
    population: int = 50
    max_evaluations: int = 5000
    relaxation_decay: float = 2.0


@dataclass
class StudySection:
    seed: int = 20240501
    methods: list = field(default_factory=lambda: ["wsm"])
    criteria: list = field(default_factory=lambda: ["max_total", "max_agent:W1"])
    structures: Any = "all"  # "all" or list of structure labels
    deny: list = field(default_factory=list)  # coalition labels, e.g. "{W1,W3}"
    max_structures: int = 64
    weight_increments: dict = field(default_factory=lambda: {"2": 0.1, "3": 0.2})
    default_weight_increment: float = 0.25


@dataclass
class ScenarioConfig:
    agents: list = field(default_factory=lambda: ["W1", "W2", "W3"])
    reservoir: ReservoirSection = field(default_factory=ReservoirSection)
    schedule: ScheduleSection = field(default_factory=ScheduleSection)
    soo: SooSection = field(default_factory=SooSection)
    moo: MooSection = field(default_factory=MooSection)
    study: StudySection = field(default_factory=StudySection)
    spec_version: int = CONFIG_VERSION

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        d = asdict(self)
        return {"spec_version": d.pop("spec_version"), **d}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration root must be a JSON object")
        data = copy.deepcopy(data)
        version = data.pop("spec_version", None)
        if version != CONFIG_VERSION:
            raise ConfigError(f"spec_version must be {CONFIG_VERSION}, got {version!r}")
        sections = {
            "reservoir": ReservoirSection,
            "schedule": ScheduleSection,
            "soo": SooSection,
            "moo": MooSection,
            "study": StudySection,
        }
        kwargs: dict[str, Any] = {"spec_version": version}
        for name, klass in sections.items():
            block = data.pop(name, {})
            if not isinstance(block, dict):
                raise ConfigError(f"'{name}' must be an object")
            known = set(klass.__dataclass_fields__)
            unknown = sorted(set(block) - known)
            if unknown:
                raise ConfigError(f"unknown key(s) in '{name}': {', '.join(unknown)}")
            kwargs[name] = klass(**block)
        if "agents" in data:
            kwargs["agents"] = data.pop("agents")
        if data:
            raise ConfigError(f"unknown top-level key(s): {', '.join(sorted(data))}")
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def loads(cls, text: str, source: str = "<config>") -> "ScenarioConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
        return cls.loads(text, str(path))

    # -- derived objects -----------------------------------------------
    def agent_set(self) -> AgentSet:
        try:
            return AgentSet(tuple(str(a) for a in self.agents))
        except CoalitionError as exc:
            raise ConfigError(f"agents: {exc}") from None

    def bounds(self) -> ScenarioBounds:
        s = self.schedule
        try:
            return ScenarioBounds(float(s.rate_min), float(s.rate_max), int(s.num_intervals), float(s.interval_length))
        except ValidationError as exc:
            raise ConfigError(f"schedule: {exc}") from None

    def depth(self) -> np.ndarray:
        r = self.reservoir
        i = np.arange(r.nx)[:, None]
        j = np.arange(r.ny)[None, :]
        return r.top_depth + r.dip_x * i + r.dip_y * j

    def build_model(self) -> ReservoirModel:
        r = self.reservoir
        agents = self.agent_set()
        pob = r.overburden_density * GRAVITY * self.depth()
        wells = []
        for k, w in enumerate(r.wells):
            try:
                wells.append(WellSpec(agents.index(w["agent"]), (int(w["cell"][0]), int(w["cell"][1]))))
            except (KeyError, TypeError, IndexError):
                raise ConfigError(f"reservoir.wells[{k}] needs 'agent' and 'cell': [i, j]") from None
            except CoalitionError as exc:
                raise ConfigError(f"reservoir.wells[{k}]: {exc}") from None
        if len(wells) != agents.count:
            raise ConfigError(f"{len(wells)} wells configured for {agents.count} agents (one well per agent)")
        if not 0 < r.initial_fraction < 1:
            raise ConfigError(f"reservoir.initial_fraction must lie in (0, 1), got {r.initial_fraction}")
        try:
            return ReservoirModel(
                nx=int(r.nx),
                ny=int(r.ny),
                dx=float(r.dx),
                dy=float(r.dy),
                thickness=float(r.thickness),
                permeability=np.asarray(r.permeability_md, dtype=float) * MILLIDARCY,
                porosity=np.asarray(r.porosity, dtype=float),
                total_compressibility=float(r.total_compressibility),
                viscosity=float(r.viscosity),
                initial_pressure=r.initial_fraction * pob,
                overburden_pressure=pob,
                wells=wells,
                co2_density=float(r.co2_density),
                substeps_per_interval=int(r.substeps_per_interval),
            )
        except (ModelError, ValueError) as exc:
            raise ConfigError(f"reservoir: {exc}") from None

    def soo_config(self, seed: int | None = None) -> OptimizerConfig:
        try:
            return OptimizerConfig(
                int(self.soo.population), int(self.soo.max_evaluations), int(self.seed if seed is None else seed), float(self.soo.phi)
            )
        except ConfigurationError as exc:
            raise ConfigError(f"soo: {exc}") from None

    def moo_config(self, seed: int | None = None) -> MooConfig:
        try:
            return MooConfig(
                int(self.moo.population),
                int(self.moo.max_evaluations),
                int(self.seed if seed is None else seed),
                float(self.moo.relaxation_decay),
            )
        except ConfigurationError as exc:
            raise ConfigError(f"moo: {exc}") from None

    @property
    def seed(self) -> int:
        return int(self.study.seed)

    def weight_increment(self, m: int) -> float:
        inc = self.study.weight_increments.get(str(m), self.study.default_weight_increment)
        return float(inc)

    def validate(self) -> None:
        self.agent_set()
        self.bounds()
        self.build_model()
        self.soo_config()
        self.moo_config()
        for key, inc in list(self.study.weight_increments.items()) + [("default", self.study.default_weight_increment)]:
            k = round(1.0 / float(inc)) if float(inc) > 0 else 0
            if k < 1 or abs(k * float(inc) - 1.0) > 1e-9:
                raise ConfigError(f"study.weight_increments[{key}] must be 1/K for an integer K, got {inc}")
        bad = sorted(set(self.study.methods) - {"wsm", "cmoo"})
        if bad or not self.study.methods:
            raise ConfigError(f"study.methods must be a non-empty subset of ['wsm', 'cmoo'], got {self.study.methods}")
        if not self.study.criteria:
            raise ConfigError("study.criteria must not be empty")
        for crit in self.study.criteria:
            parse_criterion(crit, self.agent_set())


def parse_criterion(text: str, agents: AgentSet) -> tuple[str, int | None]:
    """``"max_total"`` or ``"max_agent:<label>"``."""
    if text == "max_total":
        return ("max_total", None)
    if text.startswith("max_agent:"):
        label = text.split(":", 1)[1]
        try:
            return ("max_agent", agents.index(label))
        except CoalitionError:
            raise ConfigError(f"criterion {text!r} names unknown agent {label!r}") from None
    raise ConfigError(f"unknown selection criterion {text!r} (use 'max_total' or 'max_agent:<label>')")


def default_config() -> ScenarioConfig:
    cfg = ScenarioConfig()
    cfg.validate()
    return cfg
