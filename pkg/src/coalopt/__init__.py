"""Coalition structures and injection-rate optimization for shared CO2 storage."""

from .coalition import AgentSet, Coalition, CoalitionStructure, bell_number, enumerate_structures
from .config import ScenarioConfig, default_config
from .objective import Evaluator, ScenarioBounds, evaluate
from .pareto import FrontPoint, ParetoFront, hypervolume, select_max_agent, select_max_total, weight_grid
from .reservoir import InjectionSchedule, LinearResponse, ReservoirModel, WellSpec, max_relative_pressure, simulate
from .study import StudyPlan, plan_from_config, run_study

__version__ = "0.1.0"

__all__ = [
    "AgentSet",
    "Coalition",
    "CoalitionStructure",
    "Evaluator",
    "FrontPoint",
    "InjectionSchedule",
    "LinearResponse",
    "ParetoFront",
    "ReservoirModel",
    "ScenarioBounds",
    "ScenarioConfig",
    "StudyPlan",
    "WellSpec",
    "bell_number",
    "default_config",
    "enumerate_structures",
    "evaluate",
    "hypervolume",
    "max_relative_pressure",
    "plan_from_config",
    "run_study",
    "select_max_agent",
    "select_max_total",
    "simulate",
    "weight_grid",
]
