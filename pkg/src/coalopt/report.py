"""Output files: front CSVs, JSON manifests, plot data, study directories.

CSV files use "," as delimiter, "." as decimal mark, LF line endings and
UTF-8. Floats are written with ``repr`` so values round-trip exactly and
reruns are byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable

import numpy as np

from . import plotting
from .coalition import AgentSet, CoalitionStructure
from .pareto import FrontPoint, ParetoFront
from .reservoir import PressureHistory


def _f(x: float) -> str:
    return repr(float(x))


def _write_csv(path: Path, header: list[str], rows: Iterable[list]) -> Path:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8", newline="")
    return path


def write_json(path: Path, data) -> Path:
    path.write_text(json.dumps(data, indent=2, default=_json_default) + "\n", encoding="utf-8", newline="")
    return path


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def structure_slug(structure: CoalitionStructure) -> str:
    return "cs-" + "-".join(str(k) for k in structure.canonical_key)


def front_header(structure: CoalitionStructure, agents: AgentSet, num_intervals: int) -> list[str]:
    rates = [f"q_{agents.labels[w]}_{k + 1}" for w in range(agents.count) for k in range(num_intervals)]
    coalitions = [c.label(agents) for c in structure.coalitions]
    return ["structure", "method", "weight_vector", *coalitions, "total", *rates]


def front_rows(points: Iterable[FrontPoint], structure: CoalitionStructure, agents: AgentSet) -> list[list[str]]:
    label = structure.label(agents)
    rows = []
    for p in points:
        weights = "" if p.weights is None else ";".join(_f(w) for w in p.weights)
        rows.append([label, p.method, weights, *(_f(v) for v in p.values), _f(p.total), *(_f(r) for r in p.rates.ravel())])
    return rows


def write_front_csv(path: Path, front: ParetoFront, agents: AgentSet, num_intervals: int) -> Path:
    return _write_csv(path, front_header(front.structure, agents, num_intervals), front_rows(front.points, front.structure, agents))


def read_front_csv(path: Path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def write_plot_data(path: Path, front: ParetoFront, agents: AgentSet) -> Path:
    """Whitespace-separated: one point per line, coalition values then total."""
    labels = [c.label(agents) for c in front.structure.coalitions]
    lines = ["# " + " ".join(labels) + " total"]
    for p in front.points:
        lines.append(" ".join(_f(v) for v in [*p.values, p.total]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="")
    return path


def write_front_figure(path: Path, front: ParetoFront, agents: AgentSet, title: str = "") -> Path:
    from .pareto import select_max_total

    F = front.objective_matrix()
    highlight = select_max_total(front).values if front.points else None
    fig = plotting.front_figure(F, [c.label(agents) for c in front.structure.coalitions], title, highlight)
    return plotting.save(fig, path)


def write_snapshots(directory: Path, history: PressureHistory) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    nx, ny = history.pressures.shape[1:]
    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    for s, (t, p) in enumerate(zip(history.times, history.pressures)):
        rows = ([_f(t), str(i), str(j), _f(v)] for i, j, v in zip(ii.ravel(), jj.ravel(), p.ravel()))
        paths.append(_write_csv(directory / f"snapshot_{s:04d}.csv", ["time_s", "i", "j", "pressure_pa"], rows))
    return paths


def write_study(directory: Path, report, config, figures: bool = True) -> Path:
    """Write a study report (see :mod:`coalopt.study`) to ``directory``."""
    directory = Path(directory)
    fronts_dir = directory / "fronts"
    fronts_dir.mkdir(parents=True, exist_ok=True)
    agents = report.agents
    k = report.bounds.num_intervals

    files = []
    if report.grand is not None:
        from .coalition import grand_coalition

        gfront = ParetoFront([report.grand], grand_coalition(agents.count))
        files.append(write_front_csv(fronts_dir / "grand_soo.csv", gfront, agents, k).name)

    fronts_meta = []
    for (key, method), front in report.fronts.items():
        stem = f"{structure_slug(front.structure)}_{method}"
        write_front_csv(fronts_dir / f"{stem}.csv", front, agents, k)
        write_plot_data(fronts_dir / f"{stem}.dat", front, agents)
        if figures and front.points and front.structure.m <= 3:
            write_front_figure(fronts_dir / f"{stem}.png", front, agents, f"{front.structure.label(agents)} ({method})")
        fronts_meta.append(
            {
                "structure": front.structure.label(agents),
                "method": method,
                "file": f"fronts/{stem}.csv",
                "points": len(front.points),
                "diagnostics": front.diagnostics,
                "records": [r for r in front.records] if method == "wsm" else [],
            }
        )

    rows = report.table()
    n_agents = agents.count
    table_header = ["criterion", "structure", "method", "total_mt", "coalition_values_mt", *[f"{a}_mt" for a in agents.labels], "max_rel_pressure"]
    _write_csv(
        directory / "comparison_table.csv",
        table_header,
        (
            [
                r["criterion"],
                r["structure"],
                r["method"],
                _f(r["total_mt"]),
                ";".join(_f(v) for v in r["coalition_values_mt"]),
                *(_f(r["well_totals_mt"][w]) for w in range(n_agents)),
                _f(r["max_rel_pressure"]),
            ]
            for r in rows
        ),
    )
    _write_csv(
        directory / "budget_ledger.csv",
        ["structure", "method", "run", "evaluations"],
        ([row["structure"], row["method"], str(row["run"]), str(row["evaluations"])] for row in report.ledger),
    )
    if figures and rows:
        for crit in dict.fromkeys(r["criterion"] for r in rows):
            fig = plotting.comparison_figure(rows, list(agents.labels), crit)
            plotting.save(fig, directory / f"comparison_{crit.replace(':', '_')}.png")

    manifest = {
        "seed": config.seed,
        "scenario_sha256": config.digest(),
        "budgets": {
            "soo": {"population": config.soo.population, "max_evaluations": config.soo.max_evaluations, "phi": config.soo.phi},
            "moo": {
                "population": config.moo.population,
                "max_evaluations": config.moo.max_evaluations,
                "relaxation_decay": config.moo.relaxation_decay,
            },
            "total_evaluations": report.total_evaluations,
        },
        "complete": report.complete,
        "errors": report.errors,
        "grand": None
        if report.grand is None
        else {
            "total_mt": report.grand.total,
            "well_totals_mt": report.per_well_totals(report.grand).tolist(),
            "max_rel_pressure": report.grand.max_rel_pressure,
            "seed": report.grand_record["seed"],
            "evaluations": report.grand_record["evaluations"],
        },
        "grand_on_front": report.grand_checks,
        "fronts": fronts_meta,
        "files": ["comparison_table.csv", "budget_ledger.csv", *(f"fronts/{f}" for f in files)],
    }
    write_json(directory / "manifest.json", manifest)
    return directory
