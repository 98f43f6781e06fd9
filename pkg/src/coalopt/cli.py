"""Command-line interface.

Exit codes:

====  =====================================================
0     success
1     a validation check failed
2     malformed input (config, schedule, structure, options)
3     numerical failure in the pressure solver
4     the optimizer returned an empty front
5     study finished with failed sub-runs (report incomplete)
====  =====================================================
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, plotting, report
from .coalition import (
    AgentSet,
    CoalitionError,
    CoalitionStructure,
    bell_number,
    enumerate_structures,
    is_grand_coalition,
    singletons,
)
from .config import ConfigError, ScenarioConfig, default_config
from .cso import ConfigurationError
from .fronts import cmoo_front, wsm_front
from .objective import ValidationError, coalition_value
from .pareto import FrontError, weight_grid
from .reservoir import THRESHOLD, InjectionSchedule, ModelError, NumericalError, max_relative_pressure, simulate
from .study import StudyError, plan_from_config, run_study
from .validation import SUITES, run_suite

log = logging.getLogger("coalopt")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INPUT, EXIT_NUMERICAL, EXIT_EMPTY_FRONT, EXIT_PARTIAL = 0, 1, 2, 3, 4, 5

INPUT_ERRORS = (ConfigError, CoalitionError, ValidationError, ModelError, ConfigurationError, StudyError, FrontError)


class InputError(ValueError):
    """Bad command-line input that is not covered by a module's own error type."""


def _load_config(path: str | None) -> ScenarioConfig:
    return default_config() if path is None else ScenarioConfig.load(path)


def parse_structure(text: str, agents: AgentSet) -> CoalitionStructure:
    """Brace notation (``{W1,W2}|{W3}``) or a restricted-growth key (``0,0,1`` or ``001``)."""
    text = text.strip()
    if text.startswith("{"):
        return CoalitionStructure.parse(text, agents)
    digits = text.split(",") if "," in text else list(text)
    try:
        key = [int(d) for d in digits]
    except ValueError:
        raise InputError(f"cannot parse structure {text!r}; use e.g. '{{W1,W2}}|{{W3}}' or '0,0,1'") from None
    if len(key) != agents.count:
        raise InputError(f"structure key {text!r} has {len(key)} entries for {agents.count} agents")
    return CoalitionStructure.from_key(key)


def read_schedule(path: str | Path, agents: AgentSet, num_intervals: int, interval_length: float) -> InjectionSchedule:
    """Schedule CSV: header ``well,q1,...,qK`` then one row per well label, rates in Mt/yr."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    rows = [(n, r) for n, r in enumerate(csv.reader(text.splitlines()), start=1) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError(f"{path}: empty schedule file")
    (hline, header), body = rows[0], rows[1:]
    expected = ["well", *[f"q{k + 1}" for k in range(num_intervals)]]
    if [h.strip() for h in header] != expected:
        raise InputError(f"{path}:{hline}: header must be {','.join(expected)}")
    rates = np.full((agents.count, num_intervals), np.nan)
    for line, row in body:
        if len(row) != num_intervals + 1:
            raise InputError(f"{path}:{line}: row has {len(row)} fields, expected {num_intervals + 1}")
        try:
            w = agents.index(row[0].strip())
        except CoalitionError:
            raise InputError(f"{path}:{line}: unknown well {row[0].strip()!r}") from None
        if not np.isnan(rates[w]).all():
            raise InputError(f"{path}:{line}: duplicate row for well {row[0].strip()}")
        try:
            values = [float(c) for c in row[1:]]
        except ValueError:
            raise InputError(f"{path}:{line}: rates must be numbers") from None
        if not all(math.isfinite(v) and v >= 0 for v in values):
            raise InputError(f"{path}:{line}: rates must be finite and nonnegative")
        rates[w] = values
    missing = [agents.labels[w] for w in range(agents.count) if np.isnan(rates[w]).any()]
    if missing:
        raise InputError(f"{path}: no row for well(s) {', '.join(missing)}")
    return InjectionSchedule(rates, interval_length)


def cmd_enumerate(args) -> int:
    if args.agents is not None:
        spec = args.agents.strip()
        agents = AgentSet.of_size(int(spec)) if spec.isdigit() else AgentSet(tuple(s.strip() for s in spec.split(",")))
    else:
        agents = _load_config(args.config).agent_set()
    structures = enumerate_structures(agents, max_agents=args.max_agents)
    if not args.count_only:
        for cs in structures:
            print(f"{','.join(map(str, cs.canonical_key))}\t{cs.label(agents)}")
    print(f"agents={agents.count} structures={len(structures)} bell={bell_number(agents.count)}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    agents, bounds = config.agent_set(), config.bounds()
    model = config.build_model()
    schedule = read_schedule(args.schedule, agents, bounds.num_intervals, bounds.interval_length)
    structure = parse_structure(args.structure, agents) if args.structure else singletons(agents.count)
    try:
        schedule.check_bounds(bounds.rate_min, bounds.rate_max)
    except ModelError as exc:
        print(f"warning: {exc}; simulating anyway", file=sys.stderr)
    history = simulate(model, schedule)
    mrp = max_relative_pressure(history, model)
    feasible = mrp <= THRESHOLD
    print(f"max_rel_pressure={mrp!r}")
    print(f"verdict={'feasible' if feasible else 'infeasible'} threshold={THRESHOLD}")
    values = [coalition_value(schedule, c) for c in structure.coalitions]
    for c, v in zip(structure.coalitions, values):
        print(f"coalition {c.label(agents)} total_mt={float(v)!r}")
    print(f"total_mt={math.fsum(values)!r}")
    if args.snapshots:
        out = Path(args.snapshots)
        paths = report.write_snapshots(out, history)
        if not args.no_figures:
            ratio = history.pressures[-1] / model.overburden_pressure
            fig = plotting.pressure_figure(ratio, [w.cell for w in model.wells], "final p / p_ob")
            plotting.save(fig, out / "final_pressure_ratio.png")
        log.info("wrote %d snapshots to %s", len(paths), out)
    return EXIT_OK


def cmd_optimize(args) -> int:
    config = _load_config(args.config)
    agents, bounds = config.agent_set(), config.bounds()
    model = config.build_model()
    structure = parse_structure(args.structure, agents) if args.structure else singletons(agents.count)
    seed = config.seed if args.seed is None else args.seed
    if args.method == "cmoo" and is_grand_coalition(structure):
        raise InputError("cmoo needs at least two coalitions; use --method wsm for the grand coalition")
    if args.method == "wsm":
        grid = weight_grid(structure.m, config.weight_increment(structure.m))
        front = wsm_front(structure, model, bounds, grid, config.soo_config(seed), threads=args.threads)
        best_violation = min((r["best_violation"] for r in front.records), default=math.inf)
    else:
        front = cmoo_front(structure, model, bounds, config.moo_config(seed))
        best_violation = front.diagnostics["best_violation"]

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{report.structure_slug(structure)}_{args.method}"
    report.write_front_csv(out / f"{stem}.csv", front, agents, bounds.num_intervals)
    report.write_plot_data(out / f"{stem}.dat", front, agents)
    if not args.no_figures and front.points and structure.m <= 3:
        report.write_front_figure(out / f"{stem}.png", front, agents, f"{structure.label(agents)} ({args.method})")
    manifest = {
        "structure": structure.label(agents),
        "structure_key": list(structure.canonical_key),
        "method": args.method,
        "seed": seed,
        "scenario_sha256": config.digest(),
        "points": len(front.points),
        "diagnostics": front.diagnostics,
        "weights": [r["weights"] for r in front.records] if args.method == "wsm" else [],
        "records": front.records,
    }
    report.write_json(out / f"{stem}.json", manifest)
    print(f"{structure.label(agents)} {args.method}: {len(front.points)} points -> {out / (stem + '.csv')}")
    if not front.points:
        print(f"error: empty front; best constraint violation {best_violation:.6g}", file=sys.stderr)
        return EXIT_EMPTY_FRONT
    return EXIT_OK


def cmd_study(args) -> int:
    config = _load_config(args.config)
    if args.seed is not None:
        config.study.seed = args.seed
    plan = plan_from_config(config, methods=[args.method] if args.method else None)
    rep = run_study(plan, config.build_model(), config.bounds(), threads=args.threads)
    report.write_study(Path(args.out), rep, config, figures=not args.no_figures)
    for row in rep.table():
        print(f"{row['criterion']:>14}  {row['structure']:<16} {row['method']:<5} total={row['total_mt']:.3f} Mt")
    for chk in rep.grand_checks:
        print(f"grand on front {chk['structure']} ({chk['method']}): {'yes' if chk['on_front'] else 'NO'} gap={chk['gap_mt']:.4g} Mt")
    if not rep.complete:
        for err in rep.errors:
            print(f"error: {err['structure']} ({err['method']}): {err['error']}", file=sys.stderr)
        print("study incomplete", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_validate(args) -> int:
    config = _load_config(args.config)
    results = run_suite(config, args.suite)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="scenario JSON (default: built-in desk scenario)")

    parser = argparse.ArgumentParser(prog="coalopt", description="Coalition structures and injection-rate optimization for CO2 storage.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", parents=[common], help="list coalition structures")
    p.add_argument("--agents", help="agent count or comma-separated labels (default: from config)")
    p.add_argument("--max-agents", type=int, default=12, help="enumeration cap")
    p.add_argument("--count-only", action="store_true")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("simulate", parents=[common], help="run one schedule through the pressure model")
    p.add_argument("schedule", help="schedule CSV (well,q1..qK)")
    p.add_argument("--structure", help="structure for per-coalition totals (default: singletons)")
    p.add_argument("--snapshots", metavar="DIR", help="write pressure snapshots as CSV")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_simulate)

    for name, func, helptext in (
        ("optimize", cmd_optimize, "Pareto front for one coalition structure"),
        ("study", cmd_study, "fronts for every coalition structure and the comparison table"),
    ):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--method", choices=["wsm", "cmoo"], default="wsm" if name == "optimize" else None)
        if name == "optimize":
            p.add_argument("--structure", help="brace notation or restricted-growth key (default: singletons)")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
        p.add_argument("--out", metavar="DIR", default=name if name == "study" else "front")
        p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
        p.set_defaults(func=func)

    p = sub.add_parser("validate", parents=[common], help="run the built-in oracle checks")
    p.add_argument("--suite", choices=[*SUITES, "all"], default="all")
    p.set_defaults(func=cmd_validate)
    return parser


def _configure_logging() -> None:
    level = os.environ.get("COALOPT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (*INPUT_ERRORS, InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
