"""Scenario loop: wind -> controller -> plant -> search, at a fixed step.

A run hovers at a standby point for ``standby_hold`` seconds, then hands the
position reference to the search. The same controller instance and gains
fly the whole run.
"""

from __future__ import annotations

import csv
import hashlib
import io
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .aosearch import Phase, SafeBox, SearchState, aosearch_step, dwell_evaluate, search_cost
from .config import ConfigError, ScenarioConfig, apply_overrides, scenario_from_dict
from .indi import IndiController
from .vehicle import (
    THROTTLE_MAX,
    ActuatorVector,
    SimulationFault,
    VehicleState,
    airspeed,
    step_dynamics,
    trim_station_keeping,
)
from .wind_field import WindVector, sample_wind

log = logging.getLogger(__name__)

# phase column codes
STANDBY, SEARCHING, CONVERGED = 0, 1, 2

LOG_COLUMNS = (
    "time", "phase", "x", "y", "z", "vx", "vy", "vz", "roll", "pitch", "yaw", "p", "q", "r",
    "elevator", "aileron", "rudder", "throttle_pct", "airspeed", "wind_u", "wind_w",
    "target_x", "target_z", "cost",
)
EVENT_COLUMN = "event"
_THR, _VX, _VZ, _Q = (LOG_COLUMNS.index(c) for c in ("throttle_pct", "vx", "vz", "q"))
ZERO_THROTTLE_PCT = 0.5
ZERO_THROTTLE_HOLD = 10.0


@dataclass
class RunLog:
    """Column arrays of one run, plus the search events (empty string when none)."""

    data: np.ndarray  # shape (n, len(LOG_COLUMNS))
    events: list[str]

    def __len__(self) -> int:
        return len(self.events)

    def col(self, name: str) -> np.ndarray:
        return self.data[:, LOG_COLUMNS.index(name)]

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow((*LOG_COLUMNS, EVENT_COLUMN))
        for row, ev in zip(self.data, self.events):
            w.writerow((*(format(v, ".9g") for v in row), ev))
        return buf.getvalue()

    def to_csv(self, path) -> None:
        Path(path).write_text(self.to_csv_text())

    def digest(self) -> str:
        return hashlib.sha256(self.to_csv_text().encode()).hexdigest()

    @classmethod
    def from_csv(cls, path) -> RunLog:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise ValueError(f"{path}: empty log")
            missing = [c for c in (*LOG_COLUMNS, EVENT_COLUMN) if c not in header]
            if missing:
                raise ValueError(f"{path}: log is missing columns: {', '.join(missing)}")
            idx = [header.index(c) for c in LOG_COLUMNS]
            ev = header.index(EVENT_COLUMN)
            rows, events = [], []
            for line in reader:
                rows.append([float(line[i]) for i in idx])
                events.append(line[ev])
        data = np.array(rows, dtype=float).reshape(-1, len(LOG_COLUMNS))
        return cls(data, events)


@dataclass(frozen=True)
class RunMetrics:
    mean_throttle_pct: float | None  # search start to end
    converged_mean_throttle_pct: float | None
    time_to_zero_throttle: float | None  # s after search start
    time_to_converge: float | None  # s after search start
    position_std: float | None  # m, x-z spread while converged
    converged_x: float | None
    converged_z: float | None
    search_steps: int
    restarts: int
    standby_throttle_pct: float | None
    samples: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunResult:
    config: ScenarioConfig
    log: RunLog
    metrics: RunMetrics
    standby: tuple[float, float]
    safe_box: SafeBox
    fault: str | None = None
    controller_faults: int = 0
    summary: dict = field(default_factory=dict)


def safe_box_for(config: ScenarioConfig) -> SafeBox:
    """Axis-aligned x-z box clear of the ramp, the tunnel ceiling and the outlet."""
    ramp = config.ramp
    tallest = max(ramp.with_slope(a).height for a in config.schedule.slopes)
    m = config.safe_margin
    x_te = ramp.with_slope(config.schedule.slopes[0]).trailing_edge_x
    return SafeBox(
        x_min=x_te - config.upstream_extent,
        x_max=ramp.ramp_leading_edge_x - m,
        z_min=tallest + m,
        z_max=ramp.tunnel_cross_section - m,
    )


def _trim_pct(x: float, z: float, config: ScenarioConfig) -> float:
    wind = sample_wind((x, 0.0, z), 0.0, config.schedule, config.ramp)
    return trim_station_keeping(wind, config.vehicle)[1] / THROTTLE_MAX * 100.0


def standby_position(config: ScenarioConfig, box: SafeBox | None = None) -> tuple[float, float]:
    """Hold point needing about ``standby_throttle_pct`` of trim throttle.

    Searches height above the ramp top edge (plus ``standby_x_offset``). Falls
    back to the configured position, or mid-height, when no height inside the
    safe box has that trim throttle.
    """
    box = box or safe_box_for(config)
    if config.standby_mode == "fixed":
        pos = config.standby_position
    else:
        ramp = config.ramp.with_slope(config.schedule.slopes[0])
        x = ramp.trailing_edge_x + config.standby_x_offset
        target = config.standby_throttle_pct

        def f(z):
            return _trim_pct(x, z, config) - target

        lo, hi = box.z_min, box.z_max
        if f(lo) * f(hi) < 0:
            pos = (x, float(brentq(f, lo, hi, xtol=1e-6)))
        elif config.standby_position is not None:
            pos = config.standby_position
        else:
            pos = (x, 0.5 * (lo + hi))
            log.info("no %.0f%% trim height at x=%.3f; standby at mid-height", target, x)
    pos = (float(pos[0]), float(pos[1]))
    if not box.contains(pos):
        raise ConfigError(f"standby position {pos} is outside the safe volume {box}")
    return pos


class Gust:
    """Seeded sum of sinusoids added to both wind components."""

    def __init__(self, section, seed: int):
        rng = np.random.default_rng([seed, 0x6057])
        n = section.components
        self.start = section.start
        self.amp = section.amplitude / math.sqrt(n)
        lo, hi = sorted((section.min_period, section.max_period))
        self.omega = 2 * math.pi / rng.uniform(lo, hi, size=(2, n))
        self.phase = rng.uniform(0, 2 * math.pi, size=(2, n))

    def __call__(self, t: float) -> tuple[float, float]:
        if t < self.start:
            return 0.0, 0.0
        s = self.amp * np.sin(self.omega * t + self.phase).sum(axis=1)
        return float(s[0]), float(s[1])


def run_scenario(config: ScenarioConfig) -> RunResult:
    dt = config.dt
    if not dt > 0 or config.duration < 0:
        raise ConfigError("dt must be positive and duration non-negative")
    n = int(round(config.duration / dt))
    box = safe_box_for(config)
    sx, sz = standby_position(config, box)
    vehicle = config.vehicle
    schedule, ramp = config.schedule, config.ramp

    wind0 = sample_wind((sx, 0.0, sz), 0.0, schedule, ramp)
    theta0, thr0 = trim_station_keeping(wind0, vehicle)
    state = VehicleState(position=(sx, 0.0, sz), attitude=(0.0, theta0, 0.0),
                         actuators=ActuatorVector(0.0, 0.0, 0.0, min(max(thr0, 0.0), THROTTLE_MAX)))
    ctl = IndiController(config.controller, vehicle, dt)
    ctl.reset(state)
    gust = Gust(config.gust, config.seed) if config.gust is not None else None

    rng = np.random.default_rng(config.seed)
    search: SearchState | None = None
    search_start_k = int(round(config.standby_hold / dt))
    arrive_k = 0
    target = (sx, sz)
    last_cost = math.nan
    gains = config.search
    dwell_steps = int(round(config.dwell / dt))

    data = np.empty((n, len(LOG_COLUMNS)))
    events = [""] * n
    fault = None
    k_done = 0
    for k in range(n):
        t = k * dt
        event = ""
        if k == search_start_k:
            search = SearchState.start(target)
            arrive_k = k
            event = "search-start"
        elif search is not None and k - 1 - arrive_k >= dwell_steps:
            win = data[arrive_k:k]
            sample = dwell_evaluate(win[:, 0], win[:, _THR], win[:, _VX], win[:, _VZ], win[:, _Q],
                                    start=arrive_k * dt, dwell=config.dwell, settle=config.settle)
            if sample is not None:
                last_cost = search_cost(sample, gains)
                search, target, event = aosearch_step(search, last_cost, gains, rng, box)
                arrive_k = k

        pos = state.position
        u, w = sample_wind_uw(pos, t, config)
        if gust is not None:
            gu, gw = gust(t)
            u, w = u + gu, w + gw
        wind = WindVector(u, w)
        V = airspeed(state, wind)
        out = ctl.update(state, (target[0], 0.0, target[1]), V)

        if search is None:
            phase = STANDBY
        else:
            phase = CONVERGED if search.phase is Phase.CONVERGED else SEARCHING
        vel, att, rates, act = state.velocity, state.attitude, state.rates, state.actuators
        data[k] = (t, phase, pos[0], pos[1], pos[2], vel[0], vel[1], vel[2],
                   att[0], att[1], att[2], rates[0], rates[1], rates[2],
                   act.elevator, act.aileron, act.rudder, act.throttle_pct, V, u, w,
                   target[0], target[1], last_cost)
        events[k] = event
        k_done = k + 1
        try:
            state = step_dynamics(state, out.command, wind, vehicle, dt)
        except SimulationFault as exc:
            fault = f"t={t + dt:.2f}s: {exc}"
            log.error("simulation fault at %s", fault)
            break

    run_log = RunLog(data[:k_done].copy(), events[:k_done])
    metrics = compute_metrics(run_log)
    return RunResult(config=config, log=run_log, metrics=metrics, standby=(sx, sz), safe_box=box,
                     fault=fault, controller_faults=ctl.faults)


def sample_wind_uw(pos, t: float, config: ScenarioConfig) -> tuple[float, float]:
    wv = sample_wind(pos, t, config.schedule, config.ramp)
    return wv.u, wv.w


def _first_sustained(times: np.ndarray, mask: np.ndarray, hold: float) -> int | None:
    """Index where ``mask`` turns true and stays true for at least ``hold`` seconds."""
    start = None
    for i, ok in enumerate(mask):
        if ok:
            if start is None:
                start = i
            if times[i] - times[start] >= hold - 1e-9:
                return start
        else:
            start = None
    return None


def compute_metrics(run_log: RunLog) -> RunMetrics:
    n = len(run_log)
    if n == 0:
        return RunMetrics(None, None, None, None, None, None, None, 0, 0, None, 0)
    t = run_log.col("time")
    phase = run_log.col("phase")
    thr = run_log.col("throttle_pct")
    events = run_log.events
    searching = np.flatnonzero(phase >= SEARCHING)
    steps = sum(ev in ("move", "reverse", "random-pick", "restart") for ev in events)
    restarts = sum(ev == "restart" for ev in events)

    standby = phase == STANDBY
    standby_thr = None
    if standby.any():
        last = t[standby][-1]
        window = standby & (t >= last - 10.0)
        standby_thr = float(thr[window].mean())
    if not searching.size:
        return RunMetrics(None, None, None, None, None, None, None, steps, restarts, standby_thr, n)

    k0 = int(searching[0])
    t0 = float(t[k0])
    mean_thr = float(np.clip(thr[k0:].mean(), 0.0, 100.0))
    i_zero = _first_sustained(t[k0:], thr[k0:] < ZERO_THROTTLE_PCT, ZERO_THROTTLE_HOLD)
    t_zero = None if i_zero is None else float(t[k0 + i_zero] - t0)
    conv = phase == CONVERGED
    if conv.any():
        t_conv = float(t[np.argmax(conv)] - t0)
        x, z = run_log.col("x")[conv], run_log.col("z")[conv]
        conv_thr = float(thr[conv].mean())
        pos_std = float(math.sqrt(x.var() + z.var()))
        cx, cz = float(x.mean()), float(z.mean())
    else:
        t_conv = conv_thr = pos_std = cx = cz = None
    return RunMetrics(mean_thr, conv_thr, t_zero, t_conv, pos_std, cx, cz, steps, restarts,
                      standby_thr, n)


@dataclass(frozen=True)
class ConvergedSegment:
    start: float
    end: float
    x: float
    z: float
    throttle_pct: float
    samples: int


def converged_segments(run_log: RunLog) -> list[ConvergedSegment]:
    """Maximal runs of converged-phase samples with their mean position and throttle."""
    phase = run_log.col("phase")
    conv = np.concatenate([[False], phase == CONVERGED, [False]])
    edges = np.flatnonzero(np.diff(conv.astype(int)))
    t = run_log.col("time")
    out = []
    for a, b in zip(edges[::2], edges[1::2]):
        out.append(ConvergedSegment(
            float(t[a]), float(t[b - 1]), float(run_log.col("x")[a:b].mean()),
            float(run_log.col("z")[a:b].mean()), float(run_log.col("throttle_pct")[a:b].mean()),
            int(b - a)))
    return out


@dataclass
class SweepRow:
    value: object
    metrics: RunMetrics | None
    fault: str | None
    result: RunResult | None = field(default=None, repr=False)


def _sweep_one(raw: dict, axis: str, value, base_dir) -> SweepRow:
    try:
        cfg = scenario_from_dict(apply_overrides(raw, {axis: value}),
                                 None if base_dir is None else Path(base_dir))
        res = run_scenario(cfg)
    except (ConfigError, SimulationFault, ValueError, RuntimeError) as exc:
        return SweepRow(value, None, f"{type(exc).__name__}: {exc}")
    return SweepRow(value, res.metrics, res.fault, res)


def run_sweep(base: ScenarioConfig, axis: str, values, workers: int = 1,
              keep_results: bool = True) -> list[SweepRow]:
    """Independent runs of ``base`` with ``axis`` set to each of ``values``.

    ``axis`` is ``speed``, ``slope_angle`` or a dotted config path. A failing
    run is recorded in its row and the sweep carries on.
    """
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    raw = base.source
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, [raw] * len(values), [axis] * len(values), values,
                                 [base.base_dir] * len(values)))
    else:
        rows = [_sweep_one(raw, axis, v, base.base_dir) for v in values]
    if not keep_results:
        rows = [replace(r, result=None) for r in rows]
    return rows


def sweep_table(axis: str, rows: list[SweepRow]) -> str:
    names = list(RunMetrics.__dataclass_fields__)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow((axis, *names, "fault"))
    for r in rows:
        vals = r.metrics.to_dict() if r.metrics is not None else {}
        cells = []
        for k in names:
            v = vals.get(k)
            cells.append("" if v is None else (format(v, ".9g") if isinstance(v, float) else str(v)))
        w.writerow((r.value, *cells, r.fault or ""))
    return buf.getvalue()
