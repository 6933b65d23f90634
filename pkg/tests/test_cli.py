import hashlib
import json

import pytest

import orosoar.harness as harness
from orosoar.cli import EXIT_CONFIG, EXIT_FAULT, EXIT_OK, EXIT_USAGE, main
from orosoar.vehicle import SimulationFault

SHORT = """\
schema_version: 1
name: short
seed: 3
duration: 30
wind:
  schedule:
    - [0, 8.5, {slope}]
standby:
  hold: 5
"""


@pytest.fixture
def short_cfg(tmp_path):
    p = tmp_path / "short.yaml"
    p.write_text(SHORT.format(slope=23.2))
    return p


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_validate_bundled(capsys):
    assert main(["validate", "--config", "case1_static"]) == EXIT_OK
    assert "ok:" in capsys.readouterr().out


def test_validate_malformed_is_line_anchored(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text(SHORT.format(slope=23.2) + "  extra_field: 1\n")
    assert main(["validate", "--config", str(p)]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert f"{p}:10:3" in err and "extra_field" in err


def test_missing_config_is_usage_error(tmp_path):
    assert main(["validate", "--config", str(tmp_path / "none.yaml")]) == EXIT_USAGE


def test_bad_arguments_are_usage_errors():
    with pytest.raises(SystemExit) as exc:
        main(["run"])
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["run", "--config", "x", "--format", "png"])
    assert exc.value.code == EXIT_USAGE


def test_run_writes_artifacts_and_is_repeatable(short_cfg, tmp_path):
    before = short_cfg.read_bytes()
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(short_cfg), "--out", str(a), "--seed", "7", "--quiet"]) == EXIT_OK
    assert main(["run", "--config", str(short_cfg), "--out", str(b), "--seed", "7", "--quiet"]) == EXIT_OK
    for name in ("log.csv", "metrics.json", "timeseries.svg"):
        assert digest(a / name) == digest(b / name)
    summary = json.loads((a / "metrics.json").read_text())
    assert summary["seed"] == 7 and summary["fault"] is None
    assert short_cfg.read_bytes() == before


def test_run_csv_format_skips_figures(short_cfg, tmp_path):
    assert main(["run", "--config", str(short_cfg), "--out", str(tmp_path), "--format", "csv", "--quiet"]) == 0
    assert not (tmp_path / "timeseries.svg").exists()


def test_output_root_from_environment(short_cfg, tmp_path, monkeypatch):
    monkeypatch.setenv("OROSOAR_OUT", str(tmp_path / "root"))
    assert main(["run", "--config", str(short_cfg), "--format", "csv", "--quiet"]) == EXIT_OK
    assert (tmp_path / "root" / "short" / "log.csv").exists()


def test_simulation_fault_exit_code(short_cfg, tmp_path, monkeypatch, capsys):
    def boom(*a, **kw):
        raise SimulationFault("non-finite state")

    monkeypatch.setattr(harness, "step_dynamics", boom)
    code = main(["run", "--config", str(short_cfg), "--out", str(tmp_path), "--format", "csv"])
    assert code == EXIT_FAULT
    assert "simulation fault" in capsys.readouterr().err
    assert (tmp_path / "log.csv").exists()


def test_feasibility_without_ramp(tmp_path, capsys):
    p = tmp_path / "flat.yaml"
    p.write_text(SHORT.format(slope=0.0))
    assert main(["feasibility", "--config", str(p), "--out", str(tmp_path / "o")]) == EXIT_OK
    assert "no feasible region" in capsys.readouterr().out
    report = json.loads((tmp_path / "o" / "feasibility.json").read_text())
    assert report["has_zero_contour"] is False


def test_feasibility_case1_with_overlay(short_cfg, tmp_path, capsys):
    run_dir = tmp_path / "run"
    main(["run", "--config", str(short_cfg), "--out", str(run_dir), "--format", "csv", "--quiet"])
    out = tmp_path / "f"
    assert main(["feasibility", "--config", str(short_cfg), "--out", str(out),
                 "--log", str(run_dir / "log.csv")]) == EXIT_OK
    report = json.loads((out / "feasibility.json").read_text())
    assert report["has_zero_contour"]
    assert (out / "feasibility.svg").exists()
    assert (out / "feasibility.csv").read_text().startswith("x,z,excess_updraft\n")


def test_feasibility_missing_polar(tmp_path):
    p = tmp_path / "s.yaml"
    p.write_text(SHORT.format(slope=23.2) + "polar:\n  csv: missing.csv\n")
    assert main(["feasibility", "--config", str(p), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_plot_is_byte_stable(short_cfg, tmp_path):
    main(["run", "--config", str(short_cfg), "--out", str(tmp_path / "r"), "--format", "csv", "--quiet"])
    log = tmp_path / "r" / "log.csv"
    assert main(["plot", "--log", str(log), "--out", str(tmp_path / "p1"), "--quiet"]) == EXIT_OK
    assert main(["plot", "--log", str(log), "--out", str(tmp_path / "p2"), "--quiet"]) == EXIT_OK
    assert digest(tmp_path / "p1" / "timeseries.svg") == digest(tmp_path / "p2" / "timeseries.svg")
    assert main(["plot", "--log", str(log), "--out", str(tmp_path / "p3"), "--format", "csv", "--quiet"]) == 0
    assert (tmp_path / "p3" / "timeseries.csv").exists()


def test_plot_empty_log_writes_nothing(tmp_path, capsys):
    from orosoar.harness import EVENT_COLUMN, LOG_COLUMNS

    log = tmp_path / "empty.csv"
    log.write_text(",".join((*LOG_COLUMNS, EVENT_COLUMN)) + "\n")
    out = tmp_path / "out"
    assert main(["plot", "--log", str(log), "--out", str(out)]) == EXIT_CONFIG
    assert not out.exists()


def test_plot_schema_mismatch_names_columns(tmp_path, capsys):
    log = tmp_path / "odd.csv"
    log.write_text("time,x\n0,0\n")
    assert main(["plot", "--log", str(log), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "throttle_pct" in capsys.readouterr().err


def test_sweep_from_flags(short_cfg, tmp_path):
    out = tmp_path / "s"
    assert main(["sweep", "--config", str(short_cfg), "--out", str(out), "--axis", "seed",
                 "--values", "1,2", "--format", "csv", "--quiet"]) == EXIT_OK
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0].startswith("seed,") and len(lines) == 3
    assert (out / "log_01.csv").exists()


def test_sweep_needs_an_axis(short_cfg, tmp_path):
    assert main(["sweep", "--config", str(short_cfg), "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["sweep", "--config", str(short_cfg), "--out", str(tmp_path),
                 "--axis", "seed", "--values", "a"]) == EXIT_USAGE
