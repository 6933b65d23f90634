"""Cascaded INDI controller: position PD -> outer INDI with WLS allocation -> attitude PD -> inner INDI."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .allocation import AllocationWeights, build_allocation_problem, wls_solve
from .vehicle import (
    GRAVITY,
    THROTTLE_MAX,
    ActuatorVector,
    VehicleConfig,
    VehicleState,
    control_effectiveness,
    rotation,
    wrap_angle,
)


class ControllerFault(RuntimeError):
    pass


@dataclass(frozen=True)
class ControllerGains:
    k_pos: tuple[float, float, float] = (0.6, 0.6, 0.6)
    k_vel: tuple[float, float, float] = (1.2, 1.2, 1.2)
    k_att: tuple[float, float, float] = (8.0, 8.0, 8.0)
    k_rate: tuple[float, float, float] = (15.0, 15.0, 15.0)

    def __post_init__(self):
        for name in ("k_pos", "k_vel", "k_att", "k_rate"):
            vals = getattr(self, name)
            if len(vals) != 3 or any(not g > 0 for g in vals):
                raise ValueError(f"{name} must be three positive gains, got {vals}")


@dataclass(frozen=True)
class ControllerConfig:
    gains: ControllerGains = ControllerGains()
    inner_cutoff: float = 15.0  # rad/s
    outer_cutoff: float = 10.0  # rad/s
    roll_limits: tuple[float, float] = (-0.5, 0.5)  # rad
    pitch_limits: tuple[float, float] = (-0.35, 0.45)  # rad
    allocation: AllocationWeights = AllocationWeights()
    waypoint: tuple[float, float] = (15.0, 0.0)


@dataclass(frozen=True)
class AttitudeReference:
    roll: float
    pitch: float
    yaw: float
    thrust_increment: float = 0.0  # throttle command units

    @property
    def angles(self) -> tuple[float, float, float]:
        return (self.roll, self.pitch, self.yaw)


class LowpassFilter:
    """Second-order Butterworth low-pass over a fixed number of channels.

    Discretized with the bilinear transform, pre-warped so the -3 dB point
    sits exactly at ``cutoff`` (rad/s).
    """

    def __init__(self, cutoff: float, dt: float, channels: int = 1, initial=None):
        if not dt > 0:
            raise ValueError("dt must be positive")
        nyquist = math.pi / dt
        if not 0 < cutoff < nyquist:
            raise ValueError(f"cutoff {cutoff} rad/s must be below Nyquist {nyquist:.1f} rad/s")
        b, a = signal.butter(2, cutoff / (2 * math.pi), fs=1.0 / dt)
        self.b = tuple(float(c) for c in b)
        self.a = tuple(float(c) for c in a)
        self.cutoff = cutoff
        self.dt = dt
        self.channels = channels
        self.reset(initial)

    def reset(self, value=None) -> None:
        """Reset to steady state at ``value`` (zeros when None)."""
        b0, b1, b2 = self.b
        _, a1, a2 = self.a
        vals = [0.0] * self.channels if value is None else [float(v) for v in value]
        # transposed direct form II steady state for constant input x, output y = x
        self.z1 = [x * (b1 + b2 - a1 - a2) for x in vals]
        self.z2 = [x * (b2 - a2) for x in vals]
        self.output = list(vals)

    def step(self, sample) -> list[float]:
        b0, b1, b2 = self.b
        _, a1, a2 = self.a
        z1, z2, out = self.z1, self.z2, self.output
        for i, x in enumerate(sample):
            y = b0 * x + z1[i]
            z1[i] = b1 * x - a1 * y + z2[i]
            z2[i] = b2 * x - a2 * y
            out[i] = y
        return list(out)


def lowpass_step(filt: LowpassFilter, sample) -> list[float]:
    return filt.step(sample)


@dataclass
class IndiMemory:
    inner: LowpassFilter  # angular acceleration (3) + surface deflections (3)
    outer: LowpassFilter  # linear acceleration (3) + roll, pitch, thrust fraction (3)

    @classmethod
    def create(cls, config: ControllerConfig, dt: float, state: VehicleState | None = None) -> IndiMemory:
        inner0 = outer0 = None
        if state is not None:
            act = state.actuators
            inner0 = (*state.ang_accel, *act.surfaces)
            outer0 = (*state.accel, state.attitude[0], state.attitude[1], act.throttle / THROTTLE_MAX)
        return cls(
            LowpassFilter(config.inner_cutoff, dt, 6, inner0),
            LowpassFilter(config.outer_cutoff, dt, 6, outer0),
        )

    @property
    def ang_accel_f(self) -> tuple[float, float, float]:
        return tuple(self.inner.output[:3])

    @property
    def surfaces_f(self) -> tuple[float, float, float]:
        return tuple(self.inner.output[3:])

    @property
    def accel_f(self) -> tuple[float, float, float]:
        return tuple(self.outer.output[:3])

    @property
    def outer_controls_f(self) -> tuple[float, float, float]:
        return tuple(self.outer.output[3:])


def outer_accel_ref(position_ref, state: VehicleState, gains: ControllerGains) -> tuple[float, ...]:
    return tuple(
        kv * (kp * (r - x) - v)
        for r, x, v, kp, kv in zip(position_ref, state.position, state.velocity, gains.k_pos, gains.k_vel)
    )


def yaw_reference(position, waypoint) -> float:
    dx = waypoint[0] - position[0]
    dy = waypoint[1] - position[1]
    if dx == 0.0 and dy == 0.0:
        raise ValueError("waypoint coincides with the MAV position")
    return math.atan2(dy, dx)


def outer_indi(accel_ref, memory: IndiMemory) -> np.ndarray:
    """Acceleration increment the allocator has to realize."""
    return np.asarray(accel_ref, dtype=float) - np.asarray(memory.accel_f)


def inner_rate_ref(reference: AttitudeReference, state: VehicleState, gains: ControllerGains) -> tuple[float, ...]:
    return tuple(
        kw * (ke * wrap_angle(r - a) - w)
        for r, a, w, ke, kw in zip(reference.angles, state.attitude, state.rates, gains.k_att, gains.k_rate)
    )


def inner_indi(ang_accel_ref, ang_accel_f, G: np.ndarray, surfaces_f) -> np.ndarray:
    """u = u_f + G^-1 (nu - w_dot_f), clamped to [-1, 1]."""
    rhs = np.asarray(ang_accel_ref, dtype=float) - np.asarray(ang_accel_f, dtype=float)
    try:
        du = np.linalg.solve(G, rhs)
    except np.linalg.LinAlgError as exc:
        raise ControllerFault(f"singular control effectiveness:\n{G}") from exc
    if not np.isfinite(du).all():
        raise ControllerFault(f"control effectiveness inversion is not finite:\n{G}")
    return np.clip(np.asarray(surfaces_f, dtype=float) + du, -1.0, 1.0)


# Allocation pairs each control with the objective it mainly drives:
# roll -> lateral (y), pitch -> vertical (z), thrust -> longitudinal (x).
OBJECTIVE_ORDER = (1, 2, 0)


def outer_effectiveness(attitude, airspeed: float, vehicle: VehicleConfig) -> np.ndarray:
    """Linearized map from (roll, pitch, thrust fraction) increments to world accelerations.

    Rows are world (x, y, z). Roll tilts a lift vector of about one g
    sideways (d b_z / d roll = -b_y); pitch adds lift along b_z at
    dynamic-pressure times lift slope; thrust acts along b_x. Small angle
    of attack is assumed, so the body axes stand in for the wind axes.
    """
    R = rotation(attitude)
    by = np.array([R[0][1], R[1][1], R[2][1]])
    bz = np.array([R[0][2], R[1][2], R[2][2]])
    bx = np.array([R[0][0], R[1][0], R[2][0]])
    q_s_m = 0.5 * vehicle.air_density * airspeed * airspeed * vehicle.wing_area / vehicle.mass
    G = np.empty((3, 3))
    G[:, 0] = -GRAVITY * by
    G[:, 1] = q_s_m * vehicle.cl_alpha * bz
    G[:, 2] = vehicle.max_thrust / vehicle.mass * bx
    return G


@dataclass
class ControlOutput:
    command: ActuatorVector
    accel_ref: tuple[float, float, float]
    v_wls: tuple[float, float, float]
    reference: AttitudeReference
    ang_accel_ref: tuple[float, float, float]
    alloc_cost: float
    alloc_active: tuple[int, ...]
    alloc_degraded: bool
    fault: bool = False


@dataclass
class IndiController:
    """One controller instance with one gain set for the whole flight."""

    config: ControllerConfig
    vehicle: VehicleConfig
    dt: float
    memory: IndiMemory = field(init=False)
    last_command: ActuatorVector = field(init=False, default_factory=ActuatorVector)
    faults: int = field(init=False, default=0)

    def __post_init__(self):
        self.memory = IndiMemory.create(self.config, self.dt)

    def reset(self, state: VehicleState) -> None:
        self.memory = IndiMemory.create(self.config, self.dt, state)
        self.last_command = state.actuators

    def update(self, state: VehicleState, position_ref, airspeed: float) -> ControlOutput:
        cfg = self.config
        mem = self.memory
        act = state.actuators
        phi, theta, psi = state.attitude

        accel_ref = outer_accel_ref(position_ref, state, cfg.gains)
        mem.outer.step((*state.accel, phi, theta, act.throttle / THROTTLE_MAX))
        v_world = outer_indi(accel_ref, mem)
        phi_f, theta_f, thr_f = mem.outer_controls_f

        G_world = outer_effectiveness((phi_f, theta_f, psi), airspeed, self.vehicle)
        rows = list(OBJECTIVE_ORDER)
        problem = build_allocation_problem(
            v_world[rows], G_world[rows], (phi_f, theta_f, thr_f),
            (cfg.roll_limits, cfg.pitch_limits, (0.0, 1.0)), cfg.allocation,
        )
        sol = wls_solve(problem)
        d_roll, d_pitch, d_thr = sol.u

        psi_ref = yaw_reference(state.position, cfg.waypoint)
        reference = AttitudeReference(phi_f + d_roll, theta_f + d_pitch, psi_ref, d_thr * THROTTLE_MAX)
        throttle = min(max((thr_f + d_thr) * THROTTLE_MAX, 0.0), THROTTLE_MAX)

        rate_ref = inner_rate_ref(reference, state, cfg.gains)
        mem.inner.step((*state.ang_accel, *act.surfaces))
        G = control_effectiveness(self.vehicle, airspeed)
        fault = False
        try:
            ail, ele, rud = inner_indi(rate_ref, mem.ang_accel_f, G, mem.surfaces_f)
            command = ActuatorVector(ele, ail, rud, throttle)
        except ControllerFault:
            fault = True
            self.faults += 1
            command = self.last_command
        self.last_command = command
        return ControlOutput(
            command=command,
            accel_ref=accel_ref,
            v_wls=tuple(float(c) for c in v_world),
            reference=reference,
            ang_accel_ref=rate_ref,
            alloc_cost=sol.cost,
            alloc_active=sol.active_set,
            alloc_degraded=sol.degraded,
            fault=fault,
        )
