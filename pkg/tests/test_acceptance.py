"""Acceptance criteria, one test each, at their stated tolerances.

Each test records a PASS/FAIL line that the session prints in its summary.
"""

import time

import numpy as np
from oracles import grid_error_bound, grid_minimum, simulate_glide

from orosoar.allocation import AllocationProblem, kkt_residual, wls_solve
from orosoar.aosearch import (
    Direction,
    Phase,
    SearchGains,
    SearchState,
    aosearch_step,
    step_size,
)
from orosoar.config import bundled_scenarios, load_scenario
from orosoar.glide_polar import default_polar, minimum_sink, sink_rate
from orosoar.harness import converged_segments, run_scenario
from orosoar.indi import inner_indi
from orosoar.vehicle import THROTTLE_MAX, VehicleConfig, trim_station_keeping
from orosoar.wind_field import GridSpec, WindVector, feasible_region_grid


def record(report, n, ok, detail):
    report.append((n, bool(ok), detail))
    print(f"ACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} - {detail}")
    return bool(ok)


def _alloc_problem(rng):
    G = rng.normal(size=(3, 3)) * rng.uniform(0.5, 10.0)
    return AllocationProblem(
        G=G, v=rng.normal(size=3) * 3.0, W_u=rng.uniform(0.5, 2.0, 3), W_v=rng.uniform(0.5, 100.0, 3),
        gamma=10 ** rng.uniform(0, 6), u_p=rng.normal(size=3) * 0.05,
        lower=-rng.uniform(0.0, 0.2, 3), upper=rng.uniform(0.0, 0.2, 3),
    )


def test_1_allocation_matches_brute_force(acceptance_report):
    rng = np.random.default_rng(20240601)
    problems = [_alloc_problem(rng) for _ in range(1000)]
    t0 = time.perf_counter()
    sols = [wls_solve(p) for p in problems]
    solve_time = time.perf_counter() - t0
    worst_gap, worst_kkt, bad = -np.inf, 0.0, 0
    for p, s in zip(problems, sols):
        grid_min, _ = grid_minimum(p.G, p.v, p.W_u, p.W_v, p.gamma, p.u_p, p.lower, p.upper)
        err = grid_error_bound(p.G, p.W_u, p.W_v, p.gamma)
        gap = (s.cost - grid_min) / max(err, 1e-300)
        worst_gap = max(worst_gap, gap)
        kkt = kkt_residual(p, s.u)
        worst_kkt = max(worst_kkt, kkt)
        if s.cost > grid_min + err or kkt > 1e-8:
            bad += 1
    ok = bad == 0 and solve_time < 10.0
    record(acceptance_report, 1, ok,
           f"{bad}/1000 violations, worst (cost-grid)/grid_err {worst_gap:.3g}, "
           f"worst KKT {worst_kkt:.2e}, solve time {solve_time:.2f} s")
    assert ok


def test_2_indi_identity_and_inversion(acceptance_report):
    rng = np.random.default_rng(7)
    G0 = np.diag([72.25, 57.8, 28.9])
    identity_ok = True
    for _ in range(100):
        w_f, u_f = rng.normal(size=3), rng.uniform(-0.9, 0.9, 3)
        identity_ok &= np.array_equal(inner_indi(w_f, w_f, G0, u_f), u_f)
    worst = 0.0
    for _ in range(100):
        G = np.diag(rng.uniform(20, 80, 3)) + rng.normal(scale=2.0, size=(3, 3))
        u_f = rng.uniform(-0.3, 0.3, 3)
        w_f = rng.normal(size=3)
        nu = w_f + rng.normal(scale=3.0, size=3)
        u = inner_indi(nu, w_f, G, u_f)
        worst = max(worst, float(np.max(np.abs(G @ (u - u_f) - (nu - w_f)))))
    ok = identity_ok and worst < 1e-12
    record(acceptance_report, 2, ok, f"identity exact: {identity_ok}, worst round-trip residual {worst:.2e}")
    assert ok


def test_3_polar_consistency(acceptance_report):
    cfg = VehicleConfig()
    polar = cfg.polar
    lo, hi = polar.valid_domain
    worst = 0.0
    for V in np.linspace(lo + 0.3, hi - 0.3, 5):
        v_meas, sink_meas = simulate_glide(V, cfg, sink_rate(polar, V))
        worst = max(worst, abs(sink_meas / sink_rate(polar, v_meas) - 1.0))
    v_min, _ = minimum_sink(default_polar())
    ok = worst < 0.02 and abs(v_min - 9.1) <= 0.1
    record(acceptance_report, 3, ok, f"worst glide sink error {worst:.2e}, minimum sink at {v_min:.3f} m/s")
    assert ok


def test_4_case1_soaring(acceptance_report, case1_result):
    m = case1_result.metrics
    _, thr = trim_station_keeping(WindVector(8.5, 0.0), case1_result.config.vehicle)
    flat_pct = 100.0 * thr / THROTTLE_MAX
    wall = case1_result.summary["wall_time"]
    ok = (m.time_to_converge is not None and m.time_to_converge <= 600.0
          and m.converged_mean_throttle_pct is not None and m.converged_mean_throttle_pct < 2.0
          and flat_pct >= 30.0 and abs(m.standby_throttle_pct - 20.0) <= 2.0 and wall < 120.0)
    record(acceptance_report, 4, ok,
           f"standby {m.standby_throttle_pct:.1f}%, converged after {m.time_to_converge} s, "
           f"converged throttle {m.converged_mean_throttle_pct:.2f}% vs no-ramp {flat_pct:.1f}%, "
           f"wall {wall:.1f} s")
    assert ok


def test_5_restart_on_wind_change(acceptance_report, wind_change_result):
    res = wind_change_result
    sched = res.config.schedule
    t_change = sched.times[1]
    t_full = sched.times[-1]
    t = res.log.col("time")
    conv = res.log.col("phase") == 2
    slow = conv & (t < t_change)
    z_slow = float(res.log.col("z")[slow].mean()) if slow.any() else float("nan")
    after = [s for s in converged_segments(res.log) if s.start >= t_full]
    z_fast = after[-1].z if after else float("nan")
    ends_converged = bool(conv[-1])
    ok = res.metrics.restarts >= 1 and ends_converged and bool(after) and z_fast < z_slow
    detail = (f"restarts {res.metrics.restarts}, ends converged {ends_converged}, "
              f"z at 8.5 m/s {z_slow:.3f} m, z at 9.8 m/s {z_fast:.3f} m")
    record(acceptance_report, 5, ok, detail)
    assert ok


def test_6_slope_sweep_moves_toward_ramp(acceptance_report, slope_sweep_rows):
    # +x points from the hold toward the ramp
    xs = [r.metrics.converged_x if r.metrics else None for r in slope_sweep_rows]
    ok = None not in xs and all(b > a for a, b in zip(xs, xs[1:]))
    pairs = ", ".join(f"{r.value}deg: {x if x is None else round(x, 3)}" for r, x in zip(slope_sweep_rows, xs))
    record(acceptance_report, 6, ok, f"converged x {pairs}")
    assert ok


def test_7_search_semantics(acceptance_report):
    g = SearchGains()
    rng = np.random.default_rng(0)
    base = SearchState(current_target=(0.8, 1.9), previous_target=(0.8, 2.0), direction=Direction.DOWN,
                       previous_cost=100.0, phase=Phase.EVALUATING)
    checks = {}
    s, t, ev = aosearch_step(base, 40.0, g, rng)
    checks["converge"] = ev == "converge" and t == (0.8, 1.9) and s.phase is Phase.CONVERGED
    s, t, ev = aosearch_step(SearchState(**{**base.__dict__, "previous_cost": 80.0}), 100.0, g, rng)
    checks["reverse"] = ev == "reverse" and t == (0.8, 2.0) and s.returned
    s, t, ev = aosearch_step(SearchState(**{**base.__dict__, "direction": Direction.UP}), 80.0, g, rng)
    checks["keep"] = ev == "move" and np.allclose(t, (0.8, 2.0)) and s.direction is Direction.UP
    s, t, ev = aosearch_step(SearchState(**{**base.__dict__, "returned": True}), 80.0, g, rng)
    checks["random-pick"] = ev == "random-pick" and not s.returned and np.isclose(
        abs(t[0] - 0.8) + abs(t[1] - 1.9), 0.1)
    steps = [step_size(c, 43.0) for c in (129.0, 86.0, 64.5, 64.49)]
    checks["schedule"] = steps == [0.3, 0.2, 0.1, 0.05]
    ok = all(checks.values())
    record(acceptance_report, 7, ok, ", ".join(f"{k}={'ok' if v else 'bad'}" for k, v in checks.items()))
    assert ok


def test_8_converged_hold_on_zero_contour(acceptance_report, case1_result):
    cfg = case1_result.config
    spec = GridSpec(-2.0, 3.0, 101, 0.5, 2.85, 48)
    grid = feasible_region_grid(cfg.schedule, cfg.ramp, cfg.vehicle.polar, spec)
    conv = case1_result.log.col("phase") == 2
    d = grid.vertical_distance(case1_result.log.col("x")[conv], case1_result.log.col("z")[conv])
    frac = float(np.mean(np.nan_to_num(d, nan=np.inf) <= 0.05 + 1e-12)) if conv.any() else 0.0
    ok = grid.dz <= 0.05 + 1e-12 and frac >= 0.8
    record(acceptance_report, 8, ok,
           f"{frac:.1%} of {int(conv.sum())} converged samples within {grid.dz:.3f} m of the zero contour")
    assert ok


def test_9_determinism(acceptance_report, case1_result, wind_change_result, no_ramp_result,
                       slope_sweep_rows):
    first = {
        "case1_static": case1_result.log.digest(),
        "case1_wind_change": wind_change_result.log.digest(),
        "no_ramp": no_ramp_result.log.digest(),
        "case2_slope_sweep": slope_sweep_rows[0].result.log.digest(),
    }
    scenarios = bundled_scenarios()
    assert set(first) == set(scenarios)
    same = {name: run_scenario(load_scenario(scenarios[name])).log.digest() == d for name, d in first.items()}
    ok = all(same.values())
    record(acceptance_report, 9, ok, ", ".join(f"{k} {'identical' if v else 'DIFFERS'}" for k, v in same.items()))
    assert ok
