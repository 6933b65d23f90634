import pytest

from orosoar.config import (
    SCHEMA_VERSION,
    ConfigError,
    apply_overrides,
    bundled_scenarios,
    load_scenario,
    parse_text,
    resolve_config,
    scenario_from_dict,
)
from orosoar.glide_polar import default_polar

MINIMAL = """\
schema_version: 1
duration: 10
wind:
  schedule:
    - [0, 8.5, 23.2]
"""


def test_bundled_scenarios_validate():
    names = bundled_scenarios()
    assert {"case1_static", "case1_wind_change", "case2_slope_sweep", "no_ramp"} <= set(names)
    for path in names.values():
        load_scenario(path)


def test_minimal_defaults():
    doc, _ = parse_text(MINIMAL)
    cfg = scenario_from_dict(doc.model_dump(mode="json"))
    assert cfg.dt == 0.01 and cfg.duration == 10
    assert cfg.search.threshold == 43.0 and cfg.search.k1 == 9.6
    assert cfg.controller.waypoint == (15.0, 0.0)
    assert cfg.controller.allocation.objective == (1.0, 100.0, 1.0)
    assert cfg.ramp.slope_angle == 23.2
    assert cfg.dwell == 8.0 and cfg.settle == 3.0


def test_unknown_key_is_line_anchored():
    text = MINIMAL + "search:\n  k1: 9.6\n  bogus: 1\n"
    with pytest.raises(ConfigError) as exc:
        parse_text(text, "x.yaml")
    assert "x.yaml:8:3" in str(exc.value)
    assert "search.bogus" in str(exc.value)


def test_wrong_version_rejected():
    with pytest.raises(ConfigError, match="schema_version"):
        parse_text(MINIMAL.replace("schema_version: 1", "schema_version: 2"))
    assert SCHEMA_VERSION == 1


def test_missing_version_rejected():
    with pytest.raises(ConfigError, match="schema_version"):
        parse_text(MINIMAL.replace("schema_version: 1\n", ""))


def test_malformed_yaml_reports_position():
    with pytest.raises(ConfigError, match=r"c.yaml:\d+:\d+: malformed YAML"):
        parse_text("schema_version: 1\nwind: [oops\n", "c.yaml")


def test_bad_values_rejected():
    with pytest.raises(ConfigError, match="increasing"):
        parse_text(MINIMAL.replace("    - [0, 8.5, 23.2]", "    - [5, 8.5, 23.2]\n    - [1, 8.5, 23.2]"))
    with pytest.raises(ConfigError, match="dt"):
        parse_text(MINIMAL + "dt: 0.05\n")
    with pytest.raises(ConfigError, match="settle"):
        parse_text(MINIMAL + "search:\n  dwell: 2\n  settle: 3\n")
    with pytest.raises(ConfigError, match="standby"):
        parse_text(MINIMAL + "standby:\n  mode: fixed\n")


def test_overrides_do_not_mutate_input():
    raw = {"schema_version": 1, "duration": 10, "wind": {"schedule": [[0, 8.5, 23.2], [5, 9.0, 23.2]]}}
    out = apply_overrides(raw, {"speed": 9.8, "slope_angle": 25.2, "search.threshold": 50})
    assert out["wind"]["schedule"] == [[0, 9.8, 25.2], [5, 9.8, 25.2]]
    assert out["search"]["threshold"] == 50
    assert raw["wind"]["schedule"][0] == [0, 8.5, 23.2]
    assert "search" not in raw


def test_seed_override_via_load(tmp_path):
    p = tmp_path / "s.yaml"
    p.write_text(MINIMAL)
    assert load_scenario(p, {"seed": 7}).seed == 7


def test_polar_model_in_config():
    raw = {"schema_version": 1, "duration": 1, "wind": {"schedule": [[0, 8.5, 23.2]]},
           "polar": {"model": default_polar().to_dict()}}
    assert scenario_from_dict(raw).vehicle.polar == default_polar()


def test_polar_csv_relative_to_config(tmp_path):
    from orosoar.glide_polar import default_samples

    (tmp_path / "p.csv").write_text("airspeed,sink_rate\n" + "".join(f"{v},{s}\n" for v, s in default_samples()))
    p = tmp_path / "s.yaml"
    p.write_text(MINIMAL + "polar:\n  csv: p.csv\n")
    assert load_scenario(p).vehicle.polar == default_polar()


def test_missing_polar_file_is_config_error(tmp_path):
    p = tmp_path / "s.yaml"
    p.write_text(MINIMAL + "polar:\n  csv: nowhere.csv\n")
    with pytest.raises(ConfigError):
        load_scenario(p)


def test_resolve_config(tmp_path):
    assert resolve_config("case1_static").name == "case1_static.yaml"
    with pytest.raises(FileNotFoundError):
        resolve_config(tmp_path / "nope.yaml")
