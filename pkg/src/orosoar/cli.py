"""orosoar command line.

Exit codes: 0 ok, 1 usage, 2 config or input data, 3 simulation fault.
The output root defaults to $OROSOAR_OUT, else ./orosoar-out.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_FAULT = 0, 1, 2, 3
OUT_ENV = "OROSOAR_OUT"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
    p.add_argument("--config", required=config_required,
                   help="scenario YAML file, or the name of a bundled scenario")
    p.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./orosoar-out)")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--format", choices=("csv", "svg"), default="svg",
                   help="csv writes data files only; svg also writes figures")
    p.add_argument("--quiet", action="store_true", help="only report errors")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="orosoar", description="Orographic soaring simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check a scenario file against the schema")
    p.add_argument("--config", required=True)
    p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("run", help="fly one scenario")
    _common(p)

    p = sub.add_parser("sweep", help="fly one scenario per parameter value")
    _common(p)
    p.add_argument("--axis", help="speed, slope_angle or a dotted config path")
    p.add_argument("--values", help="comma-separated values")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("feasibility", help="excess-updraft grid and zero contour")
    _common(p)
    p.add_argument("--log", help="run log CSV to overlay")
    p.add_argument("--time", type=float, default=None,
                   help="schedule time to evaluate (default: log end, else 0)")
    p.add_argument("--nx", type=int, default=101)
    p.add_argument("--nz", type=int, default=48)

    p = sub.add_parser("plot", help="time-series figure from a run log")
    p.add_argument("--log", required=True)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "svg"), default="svg")
    p.add_argument("--quiet", action="store_true")
    return parser


def _out_dir(args, default_name: str) -> Path:
    root = args.out or os.environ.get(OUT_ENV) or "orosoar-out"
    out = Path(root)
    if not args.out:
        out = out / default_name
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc.strerror}") from exc
    if not os.access(out, os.W_OK):
        raise UsageError(f"output directory {out} is not writable")
    return out


def _load(args, extra_overrides=None):
    from .config import load_scenario, resolve_config

    try:
        path = resolve_config(args.config)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from exc
    overrides = dict(extra_overrides or {})
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return load_scenario(path, overrides or None)


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def cmd_validate(args) -> int:
    from .config import load_scenario, resolve_config

    try:
        path = resolve_config(args.config)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from exc
    cfg = load_scenario(path)
    _say(args, f"ok: {path} ({cfg.name}, schema version 1)")
    return EXIT_OK


def cmd_run(args) -> int:
    from .harness import run_scenario

    cfg = _load(args)
    out = _out_dir(args, cfg.name)
    res = run_scenario(cfg)
    res.log.to_csv(out / "log.csv")
    summary = {
        "scenario": cfg.name, "seed": cfg.seed, "dt": cfg.dt, "duration": cfg.duration,
        "standby": list(res.standby), "fault": res.fault, "controller_faults": res.controller_faults,
        "log_sha256": res.log.digest(), "metrics": res.metrics.to_dict(),
    }
    _write_json(out / "metrics.json", summary)
    if args.format == "svg" and len(res.log):
        from .plots import plot_timeseries
        plot_timeseries(res.log, out / "timeseries.svg")
    if res.fault:
        print(f"simulation fault: {res.fault}", file=sys.stderr)
        return EXIT_FAULT
    m = res.metrics
    _say(args, f"{cfg.name}: {len(res.log)} steps, converged after "
         f"{_fmt(m.time_to_converge, 's')}, converged throttle {_fmt(m.converged_mean_throttle_pct, '%')}"
         f" -> {out}")
    return EXIT_OK


def _fmt(v, unit: str) -> str:
    return "n/a" if v is None else f"{v:.2f} {unit}"


def _parse_values(text: str) -> list:
    vals = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            vals.append(int(tok))
        except ValueError:
            try:
                vals.append(float(tok))
            except ValueError as exc:
                raise UsageError(f"sweep value {tok!r} is not a number") from exc
    if not vals:
        raise UsageError("--values is empty")
    return vals


def cmd_sweep(args) -> int:
    from .harness import run_sweep, sweep_table

    cfg = _load(args)
    if args.axis is not None:
        if args.values is None:
            raise UsageError("--axis needs --values")
        axis, values = args.axis, _parse_values(args.values)
    elif cfg.sweep is not None:
        axis, values = cfg.sweep.axis, list(cfg.sweep.values)
    else:
        raise UsageError("no sweep in the config; give --axis and --values")
    out = _out_dir(args, f"{cfg.name}_sweep")
    rows = run_sweep(cfg, axis, values, workers=args.workers)
    (out / "sweep.csv").write_text(sweep_table(axis, rows))
    for i, row in enumerate(rows):
        if row.result is not None:
            row.result.log.to_csv(out / f"log_{i:02d}.csv")
            if args.format == "svg" and len(row.result.log):
                from .plots import plot_timeseries
                plot_timeseries(row.result.log, out / f"timeseries_{i:02d}.svg")
    faults = [r for r in rows if r.fault]
    for r in faults:
        print(f"{axis}={r.value}: {r.fault}", file=sys.stderr)
    _say(args, f"{len(rows)} runs over {axis} -> {out / 'sweep.csv'}")
    return EXIT_FAULT if faults else EXIT_OK


def cmd_feasibility(args) -> int:
    from .harness import CONVERGED, safe_box_for
    from .wind_field import GridSpec, feasible_region_grid

    cfg = _load(args)
    out = _out_dir(args, f"{cfg.name}_feasibility")
    run_log = None
    if args.log:
        run_log = _read_log(args.log)
    t = args.time
    if t is None:
        t = float(run_log.col("time")[-1]) if run_log is not None and len(run_log) else 0.0
    box = safe_box_for(cfg)
    ramp = cfg.ramp
    grid_spec = GridSpec(box.x_min, ramp.ramp_leading_edge_x + 0.5, args.nx,
                         0.5, ramp.tunnel_cross_section, args.nz)
    grid = feasible_region_grid(cfg.schedule, ramp, cfg.vehicle.polar, grid_spec, time=t)
    grid.to_csv(out / "feasibility.csv")
    report = {"time": t, "grid_dz": grid.dz, "has_zero_contour": grid.has_zero_contour()}
    if grid.has_zero_contour():
        cx, cz = grid.contour_centroid()
        report["contour_centroid"] = [cx, cz]
        _say(args, f"zero contour centroid x={cx:.3f} z={cz:.3f}")
    else:
        _say(args, "no feasible region")
    if run_log is not None and len(run_log):
        conv = run_log.col("phase") == CONVERGED
        if conv.any():
            d = grid.vertical_distance(run_log.col("x")[conv], run_log.col("z")[conv])
            within = float(np.mean(np.nan_to_num(d, nan=np.inf) <= grid.dz + 1e-12))
            report["converged_within_one_cell"] = within
            _say(args, f"{within:.1%} of converged samples within one grid cell ({grid.dz:.3f} m)")
    _write_json(out / "feasibility.json", report)
    if args.format == "svg":
        from .plots import plot_feasibility
        r = ramp.with_slope(grid.meta["slope_angle"])
        xs = np.linspace(r.trailing_edge_x, r.ramp_leading_edge_x, 2)
        plot_feasibility(grid, out / "feasibility.svg", run_log,
                         surface=(xs, [r.surface_height(x) for x in xs]))
    return EXIT_OK


def _read_log(path):
    from .harness import RunLog

    try:
        return RunLog.from_csv(path)
    except FileNotFoundError as exc:
        raise UsageError(f"no such log: {path}") from exc


class InputError(ValueError):
    pass


def cmd_plot(args) -> int:
    try:
        run_log = _read_log(args.log)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if len(run_log) == 0:
        raise InputError(f"{args.log}: log has no samples; nothing to plot")
    root = args.out or os.environ.get(OUT_ENV) or "orosoar-out"
    out = Path(root) if args.out else Path(root) / Path(args.log).stem
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "svg":
        from .plots import plot_timeseries
        path = plot_timeseries(run_log, out / "timeseries.svg")
    else:
        path = out / "timeseries.csv"
        cols = ("time", "x", "z", "throttle_pct", "cost")
        data = np.column_stack([run_log.col(c) for c in cols])
        np.savetxt(path, data, delimiter=",", header=",".join(cols), comments="", fmt="%.9g")
    _say(args, f"wrote {path}")
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "feasibility": cmd_feasibility,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    from .config import ConfigError
    from .vehicle import SimulationFault

    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"orosoar: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, InputError) as exc:
        print(f"orosoar: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationFault as exc:
        print(f"orosoar: simulation fault: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
