"""Single-phase, slightly compressible pressure model on a 2D grid.

Solves ``phi * c_t * dp/dt = div((k / mu) grad p) + q`` for the overpressure
relative to the (hydrostatic) initial state, with backward Euler in time, a
five-point stencil in space and no-flow boundaries. Wells inject into a
single cell. CO2 mass rates are converted to volumetric rates with a
constant density.

Because the model is linear in the well sources and time invariant, the
pressure field for any piecewise-constant schedule is a superposition of
unit-rate responses. :class:`LinearResponse` precomputes those once from
:func:`simulate` and then evaluates schedules with a matrix product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

SECONDS_PER_YEAR = 365.25 * 86400.0
KG_PER_MT = 1.0e9
MILLIDARCY = 9.869233e-16
THRESHOLD = 0.9

SOLVER_RTOL = 1e-10


class NumericalError(RuntimeError):
    """Linear solve failed or produced a non-finite pressure field."""

    def __init__(self, message: str, step: int | None = None, residual: float | None = None):
        super().__init__(message)
        self.step = step
        self.residual = residual


class ModelError(ValueError):
    """Invalid reservoir model or schedule."""


@dataclass(frozen=True)
class WellSpec:
    agent_index: int
    cell: tuple[int, int]


@dataclass
class ReservoirModel:
    """Grid geometry, rock and fluid properties, and well placement.

    Per-cell fields have shape ``(nx, ny)``; scalars are broadcast.
    """

    nx: int
    ny: int
    dx: float
    dy: float
    thickness: float
    permeability: np.ndarray
    porosity: np.ndarray
    total_compressibility: float
    viscosity: float
    initial_pressure: np.ndarray
    overburden_pressure: np.ndarray
    wells: list[WellSpec]
    co2_density: float = 700.0
    substeps_per_interval: int = 12

    def __post_init__(self):
        shape = (self.nx, self.ny)
        for name in ("permeability", "porosity", "initial_pressure", "overburden_pressure"):
            arr = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), shape).copy()
            arr.setflags(write=False)
            setattr(self, name, arr)
        self.wells = [w if isinstance(w, WellSpec) else WellSpec(int(w[0]), tuple(w[1])) for w in self.wells]
        self.validate()

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def n_wells(self) -> int:
        return len(self.wells)

    @property
    def cell_volume(self) -> float:
        return self.dx * self.dy * self.thickness

    def validate(self) -> None:
        if self.nx < 3 or self.ny < 3:
            raise ModelError(f"grid must be at least 3x3, got {self.nx}x{self.ny}")
        for name in ("dx", "dy", "thickness", "total_compressibility", "viscosity", "co2_density"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ModelError(f"{name} must be positive and finite, got {v}")
        if self.substeps_per_interval < 1:
            raise ModelError("substeps_per_interval must be >= 1")
        for name in ("permeability", "porosity", "initial_pressure", "overburden_pressure"):
            arr = getattr(self, name)
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise ModelError(f"{name} must be positive and finite in every cell")
        if np.any(self.overburden_pressure <= self.initial_pressure):
            raise ModelError("overburden pressure must exceed initial pressure in every cell")
        cells = set()
        agents = set()
        for w in self.wells:
            i, j = w.cell
            if not (0 <= i < self.nx and 0 <= j < self.ny):
                raise ModelError(f"well of agent {w.agent_index} at {w.cell} lies outside the grid")
            if w.cell in cells:
                raise ModelError(f"two wells share cell {w.cell}")
            if w.agent_index in agents:
                raise ModelError(f"agent {w.agent_index} has more than one well")
            cells.add(w.cell)
            agents.add(w.agent_index)
        if sorted(agents) != list(range(len(self.wells))):
            raise ModelError(f"well agent indices must be 0..{len(self.wells) - 1}, got {sorted(agents)}")

    def well_flat_indices(self) -> np.ndarray:
        """Row-major flat cell index for each agent's well, ordered by agent."""
        by_agent = sorted(self.wells, key=lambda w: w.agent_index)
        return np.array([w.cell[0] * self.ny + w.cell[1] for w in by_agent], dtype=np.intp)

    def pore_storage(self) -> np.ndarray:
        """``phi * c_t * V`` per cell [m^3/Pa], flattened row-major."""
        return (self.porosity * self.total_compressibility * self.cell_volume).ravel()

    def transmissibility_matrix(self) -> sp.csc_matrix:
        """Symmetric graph Laplacian of inter-cell transmissibilities [m^3/(Pa s)]."""
        k = self.permeability
        nx, ny = self.shape
        idx = np.arange(nx * ny).reshape(nx, ny)
        rows, cols, vals = [], [], []
        # harmonic averages across faces
        kx = 2.0 * k[1:, :] * k[:-1, :] / (k[1:, :] + k[:-1, :])
        tx = kx * self.dy * self.thickness / (self.dx * self.viscosity)
        ky = 2.0 * k[:, 1:] * k[:, :-1] / (k[:, 1:] + k[:, :-1])
        ty = ky * self.dx * self.thickness / (self.dy * self.viscosity)
        for a, b, t in ((idx[:-1, :], idx[1:, :], tx), (idx[:, :-1], idx[:, 1:], ty)):
            a, b, t = a.ravel(), b.ravel(), t.ravel()
            rows += [a, b]
            cols += [b, a]
            vals += [-t, -t]
        off = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nx * ny,) * 2)
        diag = -np.asarray(off.sum(axis=1)).ravel()
        return (off + sp.diags(diag)).tocsc()


@dataclass
class InjectionSchedule:
    """Injection rates [Mt/yr], one row per well (agent order), one column per interval."""

    rates: np.ndarray
    interval_length: float

    def __post_init__(self):
        self.rates = np.atleast_2d(np.asarray(self.rates, dtype=float))
        if not np.all(np.isfinite(self.rates)):
            raise ModelError("schedule rates must be finite")
        if np.any(self.rates < 0):
            raise ModelError("schedule rates must be nonnegative (injection only)")
        if not (self.interval_length > 0):
            raise ModelError(f"interval length must be positive, got {self.interval_length}")

    @property
    def num_wells(self) -> int:
        return self.rates.shape[0]

    @property
    def num_intervals(self) -> int:
        return self.rates.shape[1]

    @classmethod
    def constant(cls, rate: float, n_wells: int, n_intervals: int, interval_length: float) -> "InjectionSchedule":
        return cls(np.full((n_wells, n_intervals), float(rate)), interval_length)

    def flat(self) -> np.ndarray:
        return self.rates.ravel()

    def check_bounds(self, rate_min: float, rate_max: float) -> None:
        if np.any(self.rates < rate_min) or np.any(self.rates > rate_max):
            raise ModelError(f"rates must lie in [{rate_min}, {rate_max}] Mt/yr")


@dataclass
class PressureHistory:
    times: np.ndarray  # [s], shape (n_snapshots,)
    pressures: np.ndarray  # [Pa], shape (n_snapshots, nx, ny)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def snapshots(self) -> list[tuple[float, np.ndarray]]:
        return list(zip(self.times.tolist(), self.pressures))


def mass_rate_to_volumetric(rate_mt_per_year, density: float):
    """Mt/yr of CO2 to reservoir m^3/s."""
    return np.asarray(rate_mt_per_year) * KG_PER_MT / SECONDS_PER_YEAR / density


@dataclass
class _Stepper:
    """Factorized backward-Euler system ``(S/dt + T) dp_new = S/dt dp_old + q``."""

    matrix: sp.csc_matrix
    storage_over_dt: np.ndarray
    lu: object = field(repr=False)

    @classmethod
    def build(cls, model: ReservoirModel, dt: float) -> "_Stepper":
        s_dt = model.pore_storage() / dt
        a = (model.transmissibility_matrix() + sp.diags(s_dt)).tocsc()
        return cls(a, s_dt, splu(a))

    def step(self, dp: np.ndarray, source: np.ndarray, step_index: int) -> np.ndarray:
        rhs = self.storage_over_dt * dp + source
        new = self.lu.solve(rhs)
        if not np.all(np.isfinite(new)):
            raise NumericalError(f"non-finite pressure at step {step_index}", step_index)
        scale = np.linalg.norm(rhs)
        rel = float(np.linalg.norm(self.matrix @ new - rhs) / scale) if scale > 0 else 0.0
        if rel > SOLVER_RTOL:
            raise NumericalError(
                f"linear solve residual {rel:.3e} exceeds {SOLVER_RTOL:g} at step {step_index}", step_index, rel
            )
        return new


def _substep_dt(model: ReservoirModel, interval_length: float) -> float:
    return interval_length * SECONDS_PER_YEAR / model.substeps_per_interval


def simulate(model: ReservoirModel, schedule: InjectionSchedule) -> PressureHistory:
    """Run the pressure model for ``schedule``; one snapshot per substep plus t=0."""
    if schedule.num_wells != model.n_wells:
        raise ModelError(f"schedule has {schedule.num_wells} wells, model has {model.n_wells}")
    dt = _substep_dt(model, schedule.interval_length)
    stepper = _Stepper.build(model, dt)
    wells = model.well_flat_indices()
    n = model.n_cells
    ns = model.substeps_per_interval
    n_steps = schedule.num_intervals * ns

    p0 = model.initial_pressure.ravel()
    pressures = np.empty((n_steps + 1, n))
    pressures[0] = p0
    dp = np.zeros(n)
    vol_rates = mass_rate_to_volumetric(schedule.rates, model.co2_density)
    step = 0
    for k in range(schedule.num_intervals):
        source = np.zeros(n)
        np.add.at(source, wells, vol_rates[:, k])
        for _ in range(ns):
            step += 1
            # a quiescent reservoir stays exactly at its initial state
            if source.any() or dp.any():
                dp = stepper.step(dp, source, step)
            pressures[step] = p0 + dp
    times = np.arange(n_steps + 1) * dt
    return PressureHistory(times, pressures.reshape(n_steps + 1, model.nx, model.ny))


def max_relative_pressure(history: PressureHistory, model: ReservoirModel) -> float:
    """Largest ``p / p_ob`` over all snapshots and cells."""
    return float(np.max(history.pressures / model.overburden_pressure[None]))


class LinearResponse:
    """Unit-rate pressure responses for fast, exact schedule evaluation.

    ``rel[s, c] = base[c] + sum_d R[s, c, d] * q[d]`` where ``q`` is the
    flattened rate matrix (well-major) in Mt/yr and ``rel`` is ``p / p_ob``.
    Responses are built with one simulation per well; later intervals reuse
    the first interval's response shifted in time.
    """

    def __init__(self, model: ReservoirModel, num_intervals: int, interval_length: float):
        self.model = model
        self.num_intervals = num_intervals
        self.interval_length = interval_length
        ns = model.substeps_per_interval
        n_snap = num_intervals * ns + 1
        n_wells = model.n_wells
        pob = model.overburden_pressure.ravel()
        self.base = model.initial_pressure.ravel() / pob

        # response to 1 Mt/yr during the first interval only
        unit = np.zeros((n_wells, num_intervals))
        first = np.empty((n_wells, n_snap, model.n_cells))
        for w in range(n_wells):
            unit[:] = 0.0
            unit[w, 0] = 1.0
            hist = simulate(model, InjectionSchedule(unit, interval_length))
            first[w] = hist.pressures.reshape(n_snap, -1) - model.initial_pressure.ravel()

        resp = np.zeros((n_snap, model.n_cells, n_wells, num_intervals))
        for k in range(num_intervals):
            shift = k * ns
            resp[shift:, :, :, k] = np.moveaxis(first[:, : n_snap - shift, :], 0, -1)
        # (n_snap * n_cells, n_design), normalized by overburden pressure
        self.pressure_response = resp.reshape(n_snap * model.n_cells, n_wells * num_intervals)
        self.relative_response = np.ascontiguousarray(self.pressure_response / np.tile(pob, n_snap)[:, None])
        self._base_rows = np.tile(self.base, n_snap)
        self.n_snapshots = n_snap
        self.times = np.arange(n_snap) * _substep_dt(model, interval_length)

    @property
    def n_design(self) -> int:
        return self.relative_response.shape[1]

    def pressures(self, rates: np.ndarray) -> np.ndarray:
        """Pressure snapshots [Pa], shape ``(n_snapshots, nx, ny)``."""
        q = np.asarray(rates, dtype=float).ravel()
        dp = self.pressure_response @ q
        p = np.tile(self.model.initial_pressure.ravel(), self.n_snapshots) + dp
        return p.reshape(self.n_snapshots, self.model.nx, self.model.ny)

    def history(self, rates: np.ndarray) -> PressureHistory:
        return PressureHistory(self.times.copy(), self.pressures(rates))

    def max_relative_pressure(self, rates: np.ndarray) -> np.ndarray:
        """Max ``p / p_ob`` for one flattened schedule or a batch of shape ``(k, n_design)``."""
        q = np.asarray(rates, dtype=float)
        single = q.ndim == 1
        q = np.atleast_2d(q)
        out = np.empty(q.shape[0])
        for start in range(0, q.shape[0], 16):
            block = q[start : start + 16]
            rel = self.relative_response @ block.T
            rel += self._base_rows[:, None]
            out[start : start + 16] = rel.max(axis=0)
        return out[0] if single else out


def theis_oracle(Q: float, k: float, H: float, mu: float, phi: float, ct: float, r: float, t: float) -> float:
    """Theis pressure rise [Pa] at radius ``r`` [m] and time ``t`` [s] for volumetric rate ``Q`` [m^3/s]."""
    for name, v in (("Q", Q), ("k", k), ("H", H), ("mu", mu), ("phi", phi), ("ct", ct), ("r", r), ("t", t)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    u = phi * mu * ct * r * r / (4.0 * k * t)
    return Q * mu / (4.0 * math.pi * k * H) * exp1(u)


_EULER_GAMMA = 0.57721566490153286061


def exp1(x: float) -> float:
    """Exponential integral E1(x) for x > 0 (power series below 1, continued fraction above)."""
    if not x > 0:
        raise ValueError(f"E1 needs x > 0, got {x}")
    if x > 700.0:
        return 0.0
    if x <= 1.0:
        total = 0.0
        term = 1.0
        n = 1
        while True:
            term *= -x / n
            contrib = -term / n
            total += contrib
            if abs(contrib) < 1e-17 * abs(total) or n > 200:
                break
            n += 1
        return -_EULER_GAMMA - math.log(x) + total
    # modified Lentz for E1(x) = e^-x / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x)
