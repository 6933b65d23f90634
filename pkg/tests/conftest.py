import time

import pytest

from orosoar.config import bundled_scenarios, load_scenario
from orosoar.harness import run_scenario, run_sweep

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Collects one (criterion, passed, detail) line per acceptance criterion."""
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"ACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} - {detail}")


def _timed_run(name):
    cfg = load_scenario(bundled_scenarios()[name])
    t0 = time.perf_counter()
    res = run_scenario(cfg)
    res.summary["wall_time"] = time.perf_counter() - t0
    return res


@pytest.fixture(scope="session")
def case1_result():
    return _timed_run("case1_static")


@pytest.fixture(scope="session")
def wind_change_result():
    return _timed_run("case1_wind_change")


@pytest.fixture(scope="session")
def no_ramp_result():
    return _timed_run("no_ramp")


@pytest.fixture(scope="session")
def slope_sweep_rows():
    cfg = load_scenario(bundled_scenarios()["case2_slope_sweep"])
    return run_sweep(cfg, cfg.sweep.axis, cfg.sweep.values)
