"""Analytic wind over a tilted plate in front of a wind-tunnel outlet.

World frame: x points from the MAV toward the tunnel outlet (the MAV faces
+x into the wind), y to the left, z up. The plate is hinged on the floor at
``ramp_leading_edge_x`` and rises toward -x; its top (trailing) edge sits at
``x_le - L cos(a)``, height ``L sin(a)``.

The field is a closed-form surrogate, not a flow solution:

* updraft ``w = U tan(a) * g(x) * exp(-h / l_v)``, where ``h`` is height above
  the plate (or above the top-edge height downstream of it), ``g`` grows
  linearly from 0 at the hinge to 1 at the top edge and decays as
  ``exp(-d / l_d)`` over the distance ``d`` downstream of the edge;
* horizontal wind ``u = U * f(h)`` with a log-law attenuation inside a thin
  surface layer.

Both components are linear in the free-stream speed ``U``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .glide_polar import PolarModel, sink_rate


@dataclass(frozen=True)
class RampConfig:
    slope_angle: float = 23.2  # deg
    ramp_length: float = 2.44  # m
    tunnel_cross_section: float = 2.85  # m
    ramp_leading_edge_x: float = 3.0  # m, hinge line on the floor
    vertical_decay: float = 0.15  # fraction of ramp_length
    downstream_decay: float = 1.0  # fraction of ramp_length
    boundary_layer: float = 0.2  # m
    roughness: float = 0.005  # m

    def __post_init__(self):
        if not 0.0 <= self.slope_angle < 90.0:
            raise ValueError(f"slope_angle must be in [0, 90), got {self.slope_angle}")
        if self.ramp_length <= 0:
            raise ValueError("ramp_length must be positive")
        if self.vertical_decay <= 0 or self.downstream_decay <= 0:
            raise ValueError("decay scales must be positive")
        if self.boundary_layer <= 0 or self.roughness <= 0:
            raise ValueError("boundary layer thickness and roughness must be positive")

    def with_slope(self, slope_angle: float) -> RampConfig:
        if slope_angle == self.slope_angle:
            return self
        return replace(self, slope_angle=slope_angle)

    @property
    def height(self) -> float:
        return self.ramp_length * math.sin(math.radians(self.slope_angle))

    @property
    def run(self) -> float:
        return self.ramp_length * math.cos(math.radians(self.slope_angle))

    @property
    def trailing_edge_x(self) -> float:
        return self.ramp_leading_edge_x - self.run

    def surface_height(self, x: float) -> float:
        p = (self.ramp_leading_edge_x - x) / self.run
        if p <= 0.0:
            return 0.0
        return self.height * min(p, 1.0)


@dataclass(frozen=True)
class WindSchedule:
    """Piecewise-linear (time, nominal_speed, slope_angle) table, clamped at both ends."""

    times: tuple[float, ...]
    speeds: tuple[float, ...]
    slopes: tuple[float, ...]

    def __post_init__(self):
        n = len(self.times)
        if n == 0 or len(self.speeds) != n or len(self.slopes) != n:
            raise ValueError("schedule columns must be non-empty and equally long")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("schedule times must be strictly increasing")
        if any(s < 0 for s in self.speeds):
            raise ValueError("nominal speeds must be non-negative")
        if any(not 0.0 <= a < 90.0 for a in self.slopes):
            raise ValueError("slope angles must be in [0, 90)")

    @classmethod
    def constant(cls, speed: float, slope: float) -> WindSchedule:
        return cls((0.0,), (float(speed),), (float(slope),))

    @classmethod
    def from_rows(cls, rows) -> WindSchedule:
        rows = list(rows)
        return cls(
            tuple(float(r[0]) for r in rows),
            tuple(float(r[1]) for r in rows),
            tuple(float(r[2]) for r in rows),
        )

    def at(self, t: float) -> tuple[float, float]:
        """Nominal speed and slope angle at time ``t``."""
        times = self.times
        if t <= times[0]:
            return self.speeds[0], self.slopes[0]
        if t >= times[-1]:
            return self.speeds[-1], self.slopes[-1]
        # schedules are short; a linear scan is fine
        i = 1
        while times[i] < t:
            i += 1
        f = (t - times[i - 1]) / (times[i] - times[i - 1])
        speed = self.speeds[i - 1] + f * (self.speeds[i] - self.speeds[i - 1])
        slope = self.slopes[i - 1] + f * (self.slopes[i] - self.slopes[i - 1])
        return speed, slope


@dataclass(frozen=True)
class WindVector:
    u: float  # horizontal, positive blowing toward the MAV (world -x)
    w: float  # vertical, positive up

    def world(self) -> tuple[float, float, float]:
        return (-self.u, 0.0, self.w)


def wind_components(x: float, z: float, speed: float, ramp: RampConfig) -> tuple[float, float]:
    """(u, w) for free-stream ``speed`` over ``ramp`` at its own slope angle."""
    a = math.radians(ramp.slope_angle)
    z_s = ramp.surface_height(x)
    h = z - z_s
    if h < 0.0:
        h = 0.0
    if h < ramp.boundary_layer:
        z0 = ramp.roughness
        u = speed * math.log1p(h / z0) / math.log1p(ramp.boundary_layer / z0)
    else:
        u = speed
    if a == 0.0:
        return u, 0.0
    run = ramp.run
    p = (ramp.ramp_leading_edge_x - x) / run
    if p <= 0.0:
        return u, 0.0
    if p <= 1.0:
        growth = p
    else:
        growth = math.exp(-(p - 1.0) * run / (ramp.downstream_decay * ramp.ramp_length))
    w = speed * math.tan(a) * growth * math.exp(-h / (ramp.vertical_decay * ramp.ramp_length))
    return u, w


def _check_finite(position, time: float) -> None:
    if not math.isfinite(time) or not all(math.isfinite(float(c)) for c in position):
        raise ValueError(f"non-finite wind query: position={position}, time={time}")


def sample_wind(position, time: float, schedule: WindSchedule, ramp: RampConfig) -> WindVector:
    """Wind at ``position`` (x, y, z) and ``time``; uniform in y."""
    _check_finite(position, time)
    speed, slope = schedule.at(time)
    u, w = wind_components(float(position[0]), float(position[2]), speed, ramp.with_slope(slope))
    return WindVector(u, w)


def excess_updraft(position, time: float, schedule: WindSchedule, ramp: RampConfig,
                   polar: PolarModel) -> float:
    """Updraft minus the sink rate at the airspeed of a MAV holding ``position``.

    A stationary MAV sees airspeed sqrt(u^2 + w^2). Raises
    ``PolarDomainError`` when that airspeed is outside the polar's domain.
    """
    wind = sample_wind(position, time, schedule, ramp)
    airspeed = math.hypot(wind.u, wind.w)
    return wind.w - sink_rate(polar, airspeed)


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    nx: int
    z_min: float
    z_max: float
    nz: int
    y: float = 0.0

    def __post_init__(self):
        if self.nx < 1 or self.nz < 1:
            raise ValueError("grid must have at least one point per axis")
        if self.x_max < self.x_min or self.z_max < self.z_min:
            raise ValueError("grid bounds are inverted")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def zs(self) -> np.ndarray:
        return np.linspace(self.z_min, self.z_max, self.nz)


@dataclass
class FeasibilityGrid:
    """Excess updraft on an x-z grid; ``values[i, j]`` is at ``(xs[j], zs[i])``.

    NaN marks points below the ramp surface or where the local airspeed
    is outside the polar domain.
    """

    xs: np.ndarray
    zs: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def dz(self) -> float:
        return float(self.zs[1] - self.zs[0]) if len(self.zs) > 1 else 0.0

    def has_zero_contour(self) -> bool:
        return bool(self.contour_points().size)

    def zero_heights(self) -> np.ndarray:
        """Per column, the height of the highest downward sign change (excess < 0 above, >= 0 below)."""
        out = np.full(len(self.xs), np.nan)
        v = self.values
        for j in range(len(self.xs)):
            col = v[:, j]
            for i in range(len(self.zs) - 1, 0, -1):
                lo, hi = col[i - 1], col[i]
                if np.isnan(lo) or np.isnan(hi):
                    continue
                if hi < 0.0 <= lo:
                    f = lo / (lo - hi)
                    out[j] = self.zs[i - 1] + f * (self.zs[i] - self.zs[i - 1])
                    break
        return out

    def vertical_distance(self, x, z) -> np.ndarray:
        """|z - zero height| at ``x``, interpolating the per-column zero heights.

        NaN where the zero height is undefined at that x.
        """
        zh = self.zero_heights()
        ok = ~np.isnan(zh)
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        if not ok.any():
            return np.full(np.broadcast(x, z).shape, np.nan)
        xs, zh = self.xs[ok], zh[ok]
        inside = (x >= xs[0]) & (x <= xs[-1])
        ref = np.interp(x, xs, zh)
        return np.where(inside, np.abs(z - ref), np.nan)

    def contour_points(self) -> np.ndarray:
        """Linear-interpolated zero crossings along grid rows and columns, shape (n, 2)."""
        pts = []
        v = self.values
        for i, z in enumerate(self.zs):
            row = v[i]
            for j in range(len(self.xs) - 1):
                a, b = row[j], row[j + 1]
                if np.isnan(a) or np.isnan(b) or (a < 0) == (b < 0):
                    continue
                f = a / (a - b)
                pts.append((self.xs[j] + f * (self.xs[j + 1] - self.xs[j]), z))
        for j, x in enumerate(self.xs):
            col = v[:, j]
            for i in range(len(self.zs) - 1):
                a, b = col[i], col[i + 1]
                if np.isnan(a) or np.isnan(b) or (a < 0) == (b < 0):
                    continue
                f = a / (a - b)
                pts.append((x, self.zs[i] + f * (self.zs[i + 1] - self.zs[i])))
        return np.array(pts).reshape(-1, 2)

    def contour_centroid(self) -> tuple[float, float]:
        pts = self.contour_points()
        if not pts.size:
            raise ValueError("no zero contour in grid")
        return float(pts[:, 0].mean()), float(pts[:, 1].mean())

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("x,z,excess_updraft\n")
            for i, z in enumerate(self.zs):
                for j, x in enumerate(self.xs):
                    fh.write(f"{x:.6g},{z:.6g},{self.values[i, j]:.9g}\n")


def feasible_region_grid(schedule: WindSchedule, ramp: RampConfig, polar: PolarModel,
                         grid: GridSpec, time: float = 0.0) -> FeasibilityGrid:
    speed, slope = schedule.at(time)
    r = ramp.with_slope(slope)
    v_min, v_max = polar.valid_domain
    xs, zs = grid.xs, grid.zs
    values = np.full((len(zs), len(xs)), np.nan)
    for j, x in enumerate(xs):
        z_s = r.surface_height(float(x))
        for i, z in enumerate(zs):
            if z < z_s:
                continue
            u, w = wind_components(float(x), float(z), speed, r)
            airspeed = math.hypot(u, w)
            if v_min <= airspeed <= v_max:
                values[i, j] = w - sink_rate(polar, airspeed)
    meta = {"time": time, "nominal_speed": speed, "slope_angle": slope}
    return FeasibilityGrid(xs, zs, values, meta)
