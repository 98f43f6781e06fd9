import json

import numpy as np
import pytest

from coalopt.config import CONFIG_VERSION, ConfigError, ScenarioConfig, default_config, parse_criterion
from coalopt.reservoir import MILLIDARCY


def test_round_trip_is_identity():
    cfg = default_config()
    again = ScenarioConfig.loads(cfg.dumps())
    assert again == cfg
    assert again.dumps() == cfg.dumps()
    assert again.digest() == cfg.digest()
    assert json.loads(cfg.dumps())["spec_version"] == CONFIG_VERSION


def test_load_from_file(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(default_config().dumps(), encoding="utf-8")
    assert ScenarioConfig.load(path) == default_config()
    with pytest.raises(ConfigError, match="cannot read"):
        ScenarioConfig.load(tmp_path / "missing.json")


def test_desk_defaults():
    cfg = default_config()
    b = cfg.bounds()
    assert (b.num_intervals, b.interval_length, b.rate_min, b.rate_max) == (5, 3.0, 0.24, 7.0)
    assert b.duration == 15.0
    assert (cfg.soo.population, cfg.soo.max_evaluations) == (50, 5000)
    assert cfg.weight_increment(2) == 0.1 and cfg.weight_increment(3) == 0.2
    model = cfg.build_model()
    assert model.n_wells == 3
    assert float(model.permeability[0, 0]) == pytest.approx(200 * MILLIDARCY)
    np.testing.assert_allclose(model.initial_pressure / model.overburden_pressure, 0.75)


def test_partial_sections_use_defaults():
    cfg = ScenarioConfig.from_dict({"spec_version": 1, "schedule": {"num_intervals": 2}})
    assert cfg.schedule.num_intervals == 2
    assert cfg.schedule.rate_max == 7.0


def test_heterogeneous_permeability_field():
    data = default_config().to_dict()
    data["reservoir"].update(nx=4, ny=4, permeability_md=[[100.0] * 4, [200.0] * 4, [300.0] * 4, [400.0] * 4])
    data["reservoir"]["wells"] = [{"agent": f"W{i + 1}", "cell": [i, i]} for i in range(3)]
    model = ScenarioConfig.from_dict(data).build_model()
    assert float(model.permeability[3, 0]) == pytest.approx(400 * MILLIDARCY)


def test_invalid_json_reports_line_and_column():
    text = '{\n  "spec_version": 1,\n  "schedule": {,}\n}'
    with pytest.raises(ConfigError, match=r"<config>:3:\d+"):
        ScenarioConfig.loads(text)


def mutated(**changes):
    data = default_config().to_dict()
    for dotted, value in changes.items():
        *path, key = dotted.split("__")
        target = data
        for p in path:
            target = target[p]
        target[key] = value
    return data


@pytest.mark.parametrize(
    "data, message",
    [
        (mutated(spec_version=2), "spec_version"),
        (mutated(schedule__bogus=1), "unknown key"),
        (mutated(extra=1), "unknown top-level"),
        (mutated(agents=["W1", "W2", "W3", "W4"]), "3 wells configured for 4 agents"),
        (mutated(agents=["W1", "W2"]), "unknown agent"),
        (mutated(agents=["W1", "W1", "W3"]), "distinct"),
        (mutated(study__weight_increments={"2": 0.3}), "1/K"),
        (mutated(study__methods=["nsga"]), "methods"),
        (mutated(study__criteria=["max_agent:W9"]), "unknown agent"),
        (mutated(study__criteria=[]), "criteria"),
        (mutated(reservoir__initial_fraction=1.2), "initial_fraction"),
        (mutated(reservoir__wells=[{"agent": "W1"}]), "needs 'agent' and 'cell'"),
        (mutated(reservoir__nx=10), "outside the grid"),
        (mutated(soo__population=7), "soo"),
        (mutated(moo__max_evaluations=10), "moo"),
        (mutated(schedule__rate_min=9.0), "schedule"),
        ([1, 2], "object"),
    ],
)
def test_validation_errors(data, message):
    with pytest.raises(ConfigError, match=message):
        ScenarioConfig.from_dict(data)


def test_parse_criterion():
    agents = default_config().agent_set()
    assert parse_criterion("max_total", agents) == ("max_total", None)
    assert parse_criterion("max_agent:W2", agents) == ("max_agent", 1)
    with pytest.raises(ConfigError):
        parse_criterion("min_total", agents)


def test_seed_overrides():
    cfg = default_config()
    assert cfg.soo_config().seed == cfg.seed
    assert cfg.soo_config(seed=7).seed == 7
    assert cfg.moo_config(seed=7).seed == 7
