"""Sink rate versus airspeed, split at the windmilling breakpoint."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
from numpy.polynomial import Polynomial

DEFAULT_BREAKPOINT = 9.8
DEGREE = 4


class PolarDomainError(ValueError):
    """Airspeed outside the range the polar was fitted on."""


class PolarFitError(ValueError):
    pass


@dataclass(frozen=True)
class PolarModel:
    """Two quartic segments; coefficients are lowest order first, in m/s of airspeed."""

    breakpoint_airspeed: float
    low_segment: tuple[float, ...]
    high_segment: tuple[float, ...]
    valid_domain: tuple[float, float]
    residual_rms: float = 0.0

    def __post_init__(self):
        v_min, v_max = self.valid_domain
        if not v_min < self.breakpoint_airspeed < v_max:
            raise ValueError("breakpoint must lie strictly inside the valid domain")

    def segment(self, airspeed: float) -> tuple[float, ...]:
        return self.low_segment if airspeed < self.breakpoint_airspeed else self.high_segment

    def step_at_breakpoint(self) -> float:
        v = self.breakpoint_airspeed
        return _horner(self.high_segment, v) - _horner(self.low_segment, v)

    def to_dict(self) -> dict:
        return {
            "breakpoint_airspeed": self.breakpoint_airspeed,
            "low_segment": list(self.low_segment),
            "high_segment": list(self.high_segment),
            "valid_domain": list(self.valid_domain),
            "residual_rms": self.residual_rms,
        }

    @classmethod
    def from_dict(cls, data: dict) -> PolarModel:
        return cls(
            breakpoint_airspeed=float(data["breakpoint_airspeed"]),
            low_segment=tuple(float(c) for c in data["low_segment"]),
            high_segment=tuple(float(c) for c in data["high_segment"]),
            valid_domain=tuple(float(v) for v in data["valid_domain"]),
            residual_rms=float(data.get("residual_rms", 0.0)),
        )


def _horner(coefs, x: float) -> float:
    acc = 0.0
    for c in reversed(coefs):
        acc = acc * x + c
    return acc


def _fit_segment(v: np.ndarray, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(v) <= DEGREE or len(np.unique(v)) <= DEGREE:
        raise PolarFitError(
            f"need at least {DEGREE + 1} distinct airspeeds per segment, got {len(np.unique(v))}"
        )
    # Fit in a scaled variable for conditioning, then convert back to raw airspeed.
    poly = Polynomial.fit(v, s, DEGREE)
    raw = poly.convert().coef
    coefs = np.zeros(DEGREE + 1)
    coefs[: len(raw)] = raw
    return coefs, s - poly(v)


def fit_polar(samples, breakpoint: float = DEFAULT_BREAKPOINT) -> PolarModel:
    """Least-squares quartic fit on each side of ``breakpoint``.

    ``samples`` is an iterable of (airspeed, sink_rate) pairs. The valid
    domain is the airspeed span of the samples.
    """
    data = np.asarray(list(samples), dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise PolarFitError("samples must be (airspeed, sink_rate) pairs")
    if not np.all(np.isfinite(data)):
        raise PolarFitError("samples contain non-finite values")
    v, s = data[:, 0], data[:, 1]
    below = v < breakpoint
    low, res_low = _fit_segment(v[below], s[below])
    high, res_high = _fit_segment(v[~below], s[~below])
    residuals = np.concatenate([res_low, res_high])
    return PolarModel(
        breakpoint_airspeed=float(breakpoint),
        low_segment=tuple(float(c) for c in low),
        high_segment=tuple(float(c) for c in high),
        valid_domain=(float(v.min()), float(v.max())),
        residual_rms=float(np.sqrt(np.mean(residuals**2))),
    )


def sink_rate(polar: PolarModel, airspeed: float) -> float:
    """Sink rate (m/s, positive down) at ``airspeed``; raises outside the fitted domain."""
    v_min, v_max = polar.valid_domain
    if not np.isfinite(airspeed) or airspeed < v_min or airspeed > v_max:
        raise PolarDomainError(
            f"airspeed {airspeed:.3f} m/s outside polar domain [{v_min:.3f}, {v_max:.3f}]"
        )
    return _horner(polar.segment(airspeed), airspeed)


def sink_rate_extended(polar: PolarModel, airspeed: float) -> float:
    """Sink rate usable by the plant at any airspeed.

    Inside the domain this is ``sink_rate``. Outside, drag is held at the
    edge value's coefficient so drag scales with airspeed squared, which
    makes sink scale with airspeed cubed over edge airspeed cubed.
    """
    v_min, v_max = polar.valid_domain
    edge = min(max(airspeed, v_min), v_max)
    s_edge = _horner(polar.segment(edge), edge)
    if edge == airspeed:
        return s_edge
    return s_edge * (airspeed / edge) ** 3


def minimum_sink(polar: PolarModel, resolution: float = 1e-3) -> tuple[float, float]:
    """Airspeed and value of the global sink-rate minimum, by dense scan."""
    v_min, v_max = polar.valid_domain
    grid = np.arange(v_min, v_max + resolution / 2, resolution)
    grid = grid[grid <= v_max]
    low = grid < polar.breakpoint_airspeed
    values = np.where(
        low,
        np.polynomial.polynomial.polyval(grid, polar.low_segment),
        np.polynomial.polynomial.polyval(grid, polar.high_segment),
    )
    i = int(np.argmin(values))
    return float(grid[i]), float(values[i])


def load_samples(path: str | Path) -> list[tuple[float, float]]:
    with open(path, newline="") as fh:
        return _read_samples(fh)


def _read_samples(fh) -> list[tuple[float, float]]:
    reader = csv.DictReader(fh)
    if reader.fieldnames is None or not {"airspeed", "sink_rate"} <= set(reader.fieldnames):
        raise PolarFitError("polar CSV needs 'airspeed' and 'sink_rate' columns")
    return [(float(row["airspeed"]), float(row["sink_rate"])) for row in reader]


def default_samples() -> list[tuple[float, float]]:
    """Bundled samples shaped like the Eclipson model C polar (synthetic, approximate)."""
    with resources.files("orosoar.data").joinpath("default_polar.csv").open() as fh:
        return _read_samples(fh)


@lru_cache(maxsize=1)
def default_polar() -> PolarModel:
    return fit_polar(default_samples(), DEFAULT_BREAKPOINT)
