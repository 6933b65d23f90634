"""Scenario config files: YAML validated against a versioned schema.

Unknown keys are errors. Validation messages carry the line and column of
the offending node in the source file where it can be found.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .allocation import AllocationWeights
from .aosearch import SearchGains
from .glide_polar import DEFAULT_BREAKPOINT, PolarModel, default_polar, fit_polar, load_samples
from .indi import ControllerConfig, ControllerGains
from .vehicle import VehicleConfig
from .wind_field import RampConfig, WindSchedule

SCHEMA_VERSION = 1
Triple = tuple[float, float, float]


class ConfigError(ValueError):
    """Config that cannot be read or does not match the schema."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class WindSection(_Strict):
    # rows of [time s, nominal speed m/s, slope angle deg]
    schedule: list[Triple] = Field(min_length=1)

    @field_validator("schedule")
    @classmethod
    def _increasing(cls, rows):
        times = [r[0] for r in rows]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("schedule times must be strictly increasing")
        if any(r[1] < 0 for r in rows):
            raise ValueError("nominal speeds must be non-negative")
        if any(not 0.0 <= r[2] < 90.0 for r in rows):
            raise ValueError("slope angles must be in [0, 90)")
        return rows


class GustSection(_Strict):
    amplitude: float = Field(0.3, ge=0)  # m/s per component
    components: int = Field(3, ge=1)
    min_period: float = Field(2.0, gt=0)
    max_period: float = Field(20.0, gt=0)
    start: float = Field(0.0, ge=0)


class RampSection(_Strict):
    ramp_length: float = Field(2.44, gt=0)
    tunnel_cross_section: float = Field(2.85, gt=0)
    ramp_leading_edge_x: float = 3.0
    vertical_decay: float = Field(0.15, gt=0)
    downstream_decay: float = Field(1.0, gt=0)
    boundary_layer: float = Field(0.2, gt=0)
    roughness: float = Field(0.005, gt=0)


class PolarSection(_Strict):
    csv: str | None = None
    breakpoint: float = DEFAULT_BREAKPOINT
    model: dict[str, Any] | None = None

    @model_validator(mode="after")
    def _one_source(self):
        if self.csv is not None and self.model is not None:
            raise ValueError("give either polar.csv or polar.model, not both")
        return self


class VehicleSection(_Strict):
    mass: float = Field(0.716, gt=0)
    wing_area: float = Field(0.18, gt=0)
    max_thrust: float = Field(1.23095, gt=0)
    actuator_tau: float = Field(0.05, gt=0)
    cl_alpha: float = Field(4.5, gt=0)


class GainsSection(_Strict):
    k_pos: Triple = (0.6, 0.6, 0.6)
    k_vel: Triple = (1.2, 1.2, 1.2)
    k_att: Triple = (8.0, 8.0, 8.0)
    k_rate: Triple = (15.0, 15.0, 15.0)


class ControllerSection(_Strict):
    gains: GainsSection = GainsSection()
    inner_cutoff: float = Field(15.0, gt=0)
    outer_cutoff: float = Field(10.0, gt=0)
    roll_limits: tuple[float, float] = (-0.5, 0.5)
    pitch_limits: tuple[float, float] = (-0.35, 0.45)
    waypoint: tuple[float, float] = (15.0, 0.0)


class AllocationSection(_Strict):
    objective_weights: Triple = (1.0, 100.0, 1.0)
    control_weights: Triple = (1.0, 1.0, 1.0)
    gamma: float = Field(1e6, gt=0)
    preferred: Triple = (0.0, 0.0, 0.0)


class SearchSection(_Strict):
    k1: float = Field(9.6, ge=0)
    k2: float = Field(1.6, ge=0)
    k3: float = Field(1.0, ge=0)
    k4: float = Field(10.0, ge=0)
    threshold: float = Field(43.0, gt=0)
    dwell: float = Field(8.0, gt=0)
    settle: float = Field(3.0, ge=0)
    margin: float = Field(0.3, ge=0)
    upstream_extent: float = Field(2.0, gt=0)  # safe box reach downstream of the top edge

    @model_validator(mode="after")
    def _settle_inside(self):
        if self.settle >= self.dwell:
            raise ValueError("settle must be shorter than dwell")
        return self


class StandbySection(_Strict):
    mode: Literal["auto", "fixed"] = "auto"
    throttle_pct: float = Field(20.0, gt=0, lt=100)
    x_offset: float = 0.0  # from the ramp top edge, auto mode
    position: tuple[float, float] | None = None  # (x, z), fixed mode or auto fallback
    hold: float = Field(20.0, ge=0)  # s of powered hover before the search starts

    @model_validator(mode="after")
    def _fixed_needs_position(self):
        if self.mode == "fixed" and self.position is None:
            raise ValueError("standby.mode 'fixed' needs standby.position")
        return self


class SweepSection(_Strict):
    axis: str
    values: list[float | int] = Field(min_length=1)


class ScenarioFile(_Strict):
    schema_version: int
    name: str = "scenario"
    seed: int = 0
    dt: float = Field(0.01, gt=0, le=0.01)
    duration: float = Field(ge=0)
    wind: WindSection
    gust: GustSection | None = None
    ramp: RampSection = RampSection()
    polar: PolarSection = PolarSection()
    vehicle: VehicleSection = VehicleSection()
    controller: ControllerSection = ControllerSection()
    allocation: AllocationSection = AllocationSection()
    search: SearchSection = SearchSection()
    standby: StandbySection = StandbySection()
    sweep: SweepSection | None = None

    @field_validator("schema_version")
    @classmethod
    def _known_version(cls, v):
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {v}; this build reads version {SCHEMA_VERSION}")
        return v


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything one run needs, as plain dataclasses."""

    name: str
    seed: int
    dt: float
    duration: float
    schedule: WindSchedule
    ramp: RampConfig
    vehicle: VehicleConfig
    controller: ControllerConfig
    search: SearchGains
    dwell: float = 8.0
    settle: float = 3.0
    safe_margin: float = 0.3
    upstream_extent: float = 2.0
    standby_mode: str = "auto"
    standby_throttle_pct: float = 20.0
    standby_x_offset: float = 0.0
    standby_position: tuple[float, float] | None = None
    standby_hold: float = 20.0
    gust: GustSection | None = None
    sweep: SweepSection | None = None
    source: dict = field(default_factory=dict, compare=False, repr=False)
    base_dir: str | None = field(default=None, compare=False)


def _polar_from(section: PolarSection, base_dir: Path | None) -> PolarModel:
    if section.model is not None:
        return PolarModel.from_dict(section.model)
    if section.csv is not None:
        path = Path(section.csv)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        return fit_polar(load_samples(path), section.breakpoint)
    if section.breakpoint != DEFAULT_BREAKPOINT:
        from .glide_polar import default_samples
        return fit_polar(default_samples(), section.breakpoint)
    return default_polar()


def build_scenario(doc: ScenarioFile, base_dir: Path | None = None) -> ScenarioConfig:
    polar = _polar_from(doc.polar, base_dir)
    vs = doc.vehicle
    vehicle = VehicleConfig(mass=vs.mass, wing_area=vs.wing_area, max_thrust=vs.max_thrust,
                            actuator_tau=vs.actuator_tau, cl_alpha=vs.cl_alpha, polar=polar)
    cs = doc.controller
    gains = ControllerGains(cs.gains.k_pos, cs.gains.k_vel, cs.gains.k_att, cs.gains.k_rate)
    al = doc.allocation
    weights = AllocationWeights(al.objective_weights, al.control_weights, al.gamma, al.preferred)
    controller = ControllerConfig(gains=gains, inner_cutoff=cs.inner_cutoff, outer_cutoff=cs.outer_cutoff,
                                  roll_limits=cs.roll_limits, pitch_limits=cs.pitch_limits,
                                  allocation=weights, waypoint=cs.waypoint)
    schedule = WindSchedule.from_rows(doc.wind.schedule)
    r = doc.ramp
    ramp = RampConfig(slope_angle=schedule.slopes[0], ramp_length=r.ramp_length,
                      tunnel_cross_section=r.tunnel_cross_section,
                      ramp_leading_edge_x=r.ramp_leading_edge_x, vertical_decay=r.vertical_decay,
                      downstream_decay=r.downstream_decay, boundary_layer=r.boundary_layer,
                      roughness=r.roughness)
    s = doc.search
    sb = doc.standby
    return ScenarioConfig(
        name=doc.name, seed=doc.seed, dt=doc.dt, duration=doc.duration, schedule=schedule,
        ramp=ramp, vehicle=vehicle, controller=controller,
        search=SearchGains(s.k1, s.k2, s.k3, s.k4, s.threshold),
        dwell=s.dwell, settle=s.settle, safe_margin=s.margin, upstream_extent=s.upstream_extent,
        standby_mode=sb.mode, standby_throttle_pct=sb.throttle_pct, standby_x_offset=sb.x_offset,
        standby_position=sb.position, standby_hold=sb.hold, gust=doc.gust, sweep=doc.sweep,
        source=doc.model_dump(mode="json"),
        base_dir=None if base_dir is None else str(base_dir),
    )


def _locate(root: yaml.Node | None, loc: tuple) -> yaml.Mark | None:
    """Start mark of the deepest node along ``loc`` that exists in the YAML tree."""
    node = root
    mark = root.start_mark if root is not None else None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == key:
                    nxt, mark = v, k.start_mark
                    break
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            nxt = node.value[key]
            mark = nxt.start_mark
        else:
            nxt = None
        if nxt is None:
            break
        node = nxt
    return mark


def format_validation_error(exc: ValidationError, root: yaml.Node | None, source: str) -> str:
    lines = []
    for err in exc.errors():
        loc = tuple(err["loc"])
        where = ".".join(str(p) for p in loc) or "<root>"
        mark = _locate(root, loc)
        pos = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark is not None else source
        lines.append(f"{pos}: {where}: {err['msg']}")
    return "\n".join(lines)


def parse_text(text: str, source: str = "<config>") -> tuple[ScenarioFile, dict]:
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        pos = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark is not None else source
        raise ConfigError(f"{pos}: malformed YAML: {getattr(exc, 'problem', exc)}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}:1:1: top level must be a mapping")
    try:
        return ScenarioFile.model_validate(raw), raw
    except ValidationError as exc:
        raise ConfigError(format_validation_error(exc, root, source)) from exc


def load_scenario(path, overrides: dict | None = None) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    doc, raw = parse_text(text, str(path))
    if overrides:
        raw = apply_overrides(raw, overrides)
        try:
            doc = ScenarioFile.model_validate(raw)
        except ValidationError as exc:
            raise ConfigError(format_validation_error(exc, None, f"{path} (with overrides)")) from exc
    try:
        return build_scenario(doc, path.parent)
    except (ValueError, OSError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def apply_overrides(raw: dict, overrides: dict) -> dict:
    """Copy of ``raw`` with dotted-path overrides applied.

    ``speed`` and ``slope_angle`` replace the wind schedule's column with a
    constant; any other key is a dotted path into the document.
    """
    out = copy.deepcopy(raw)
    for key, value in overrides.items():
        if key in ("speed", "slope_angle"):
            col = 1 if key == "speed" else 2
            rows = [list(r) for r in out["wind"]["schedule"]]
            for r in rows:
                r[col] = value
            out["wind"]["schedule"] = rows
            continue
        node = out
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
    return out


def scenario_from_dict(raw: dict, base_dir: Path | None = None) -> ScenarioConfig:
    try:
        doc = ScenarioFile.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(format_validation_error(exc, None, "<dict>")) from exc
    return build_scenario(doc, base_dir)



def bundled_scenarios() -> dict[str, Path]:
    from importlib import resources

    root = resources.files("orosoar.scenarios")
    return {Path(p.name).stem: Path(str(p)) for p in root.iterdir() if p.name.endswith(".yaml")}


def resolve_config(name_or_path) -> Path:
    """A path to an existing file, or the name of a bundled scenario."""
    p = Path(name_or_path)
    if p.exists():
        return p
    bundled = bundled_scenarios()
    if str(name_or_path) in bundled:
        return bundled[str(name_or_path)]
    raise FileNotFoundError(f"no such config file or bundled scenario: {name_or_path}")
