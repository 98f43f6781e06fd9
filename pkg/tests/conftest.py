import numpy as np
import pytest
from scipy.optimize import linprog

from coalopt.config import default_config
from coalopt.reservoir import LinearResponse


def small_config():
    """20 x 20 grid, 3 wells, 2 intervals: fast enough for optimizer tests."""
    cfg = default_config()
    r = cfg.reservoir
    r.nx = r.ny = 20
    r.substeps_per_interval = 6
    r.wells = [
        {"agent": "W1", "cell": [5, 6]},
        {"agent": "W2", "cell": [10, 13]},
        {"agent": "W3", "cell": [15, 7]},
    ]
    cfg.schedule.num_intervals = 2
    cfg.soo.population = 10
    cfg.soo.max_evaluations = 400
    cfg.moo.population = 20
    cfg.moo.max_evaluations = 600
    cfg.study.weight_increments = {"2": 0.25, "3": 0.5}
    cfg.validate()
    return cfg


def lp_max_weighted(response, bounds, weights_per_design):
    """Exact optimum of a linear objective under the pressure constraint (LP oracle)."""
    lo, hi = bounds.box(response.model.n_wells)
    res = linprog(
        -np.asarray(weights_per_design, dtype=float),
        A_ub=response.relative_response,
        b_ub=0.9 - response._base_rows,
        bounds=list(zip(lo, hi)),
        method="highs",
    )
    assert res.status == 0
    return -res.fun, res.x


@pytest.fixture(scope="session")
def small():
    cfg = small_config()
    model = cfg.build_model()
    bounds = cfg.bounds()
    return cfg, model, bounds, LinearResponse(model, bounds.num_intervals, bounds.interval_length)


@pytest.fixture(scope="session")
def desk():
    cfg = default_config()
    model = cfg.build_model()
    bounds = cfg.bounds()
    return cfg, model, bounds, LinearResponse(model, bounds.num_intervals, bounds.interval_length)
