"""Static SVG figures. Output bytes depend only on the inputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .harness import CONVERGED, RunLog  # noqa: E402
from .wind_field import FeasibilityGrid  # noqa: E402

plt.rcParams["svg.hashsalt"] = "orosoar"
plt.rcParams["svg.fonttype"] = "path"


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_timeseries(run_log: RunLog, path) -> Path:
    """Three panels: x and z position, throttle, search cost."""
    if len(run_log) == 0:
        raise ValueError("log is empty; nothing to plot")
    t = run_log.col("time")
    fig, axes = plt.subplots(3, 1, figsize=(8, 7), sharex=True)
    ax = axes[0]
    ax.plot(t, run_log.col("x"), label="x")
    ax.plot(t, run_log.col("z"), label="z")
    ax.plot(t, run_log.col("target_x"), "--", lw=0.8, label="target x")
    ax.plot(t, run_log.col("target_z"), "--", lw=0.8, label="target z")
    ax.set_ylabel("position [m]")
    ax.legend(loc="upper right", fontsize="small", ncol=2)
    axes[1].plot(t, run_log.col("throttle_pct"), color="tab:red")
    axes[1].set_ylabel("throttle [%]")
    cost = run_log.col("cost")
    axes[2].step(t, cost, where="post", color="tab:green")
    axes[2].set_ylabel("search cost")
    axes[2].set_xlabel("time [s]")
    conv = run_log.col("phase") == CONVERGED
    for a in axes:
        a.grid(True, lw=0.3)
        if conv.any():
            a.fill_between(t, 0, 1, where=conv, transform=a.get_xaxis_transform(),
                           color="0.9", zorder=0, step="post")
    fig.tight_layout()
    return _save(fig, path)


def plot_feasibility(grid: FeasibilityGrid, path, run_log: RunLog | None = None,
                     surface=None) -> Path:
    """Excess-updraft contours with the zero line bold, optionally with a trajectory."""
    fig, ax = plt.subplots(figsize=(8, 5))
    v = np.ma.masked_invalid(grid.values)
    finite = grid.values[np.isfinite(grid.values)]
    if finite.size:
        lim = float(np.max(np.abs(finite))) or 1.0
        cs = ax.contourf(grid.xs, grid.zs, v, levels=np.linspace(-lim, lim, 21), cmap="RdBu_r")
        fig.colorbar(cs, ax=ax, label="excess updraft [m/s]")
        if grid.has_zero_contour():
            ax.contour(grid.xs, grid.zs, v, levels=[0.0], colors="k", linewidths=2.0)
    if surface is not None:
        xs, zs = surface
        ax.fill_between(xs, 0, zs, color="0.5")
    if run_log is not None and len(run_log):
        ax.plot(run_log.col("x"), run_log.col("z"), color="tab:orange", lw=0.6, label="trajectory")
        conv = run_log.col("phase") == CONVERGED
        if conv.any():
            ax.plot(run_log.col("x")[conv], run_log.col("z")[conv], ".", ms=1, color="k",
                    label="converged")
        ax.legend(loc="upper left", fontsize="small")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("z [m]")
    ax.set_aspect("equal")
    fig.tight_layout()
    return _save(fig, path)
