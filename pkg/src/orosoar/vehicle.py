"""Point-mass MAV with attitude dynamics, closed around the glide polar.

Frames: world x toward the tunnel, y left, z up; body x forward, y left,
z up. Attitude is (roll, pitch, yaw) with roll positive right-wing-down,
pitch positive nose-up and yaw positive nose-left. Body rates (p, q, r)
follow the same signs.

Aerodynamic drag is derived from the glide polar, D = m g sink(V) / V, so
any steady unpowered glide at airspeed V descends at exactly sink(V)
regardless of how lift is trimmed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .glide_polar import PolarModel, default_polar, sink_rate_extended
from .wind_field import WindVector

THROTTLE_MAX = 9600.0
GRAVITY = 9.81


class SimulationFault(RuntimeError):
    """The plant produced a non-finite state."""


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


@dataclass(frozen=True)
class ActuatorVector:
    elevator: float = 0.0
    aileron: float = 0.0
    rudder: float = 0.0
    throttle: float = 0.0  # [0, 9600]

    def clamped(self) -> ActuatorVector:
        return ActuatorVector(
            min(max(self.elevator, -1.0), 1.0),
            min(max(self.aileron, -1.0), 1.0),
            min(max(self.rudder, -1.0), 1.0),
            min(max(self.throttle, 0.0), THROTTLE_MAX),
        )

    @property
    def surfaces(self) -> tuple[float, float, float]:
        """Deflections ordered to match the (roll, pitch, yaw) axes."""
        return (self.aileron, self.elevator, self.rudder)

    @property
    def throttle_pct(self) -> float:
        return 100.0 * self.throttle / THROTTLE_MAX


@dataclass(frozen=True)
class EffectivenessSchedule:
    """Per-axis c0 + c1 V + c2 V^2 in rad/s^2 per unit deflection, floored at ``minimum``."""

    c0: float = 0.0
    c1: float = 0.0
    c2: float = 1.0
    minimum: float = 2.0

    def __call__(self, airspeed: float) -> float:
        g = self.c0 + airspeed * (self.c1 + airspeed * self.c2)
        return g if g > self.minimum else self.minimum


@dataclass(frozen=True)
class VehicleConfig:
    mass: float = 0.716
    wingspan: float = 1.1
    wing_area: float = 0.18
    air_density: float = 1.225
    actuator_tau: float = 0.05
    max_thrust: float = 1.23095  # N; ~38% throttle holds station in 8.5 m/s with no ramp
    cl0: float = 0.3
    cl_alpha: float = 4.5  # 1/rad
    cl_min: float = -0.6
    cl_max: float = 1.4
    cy_beta: float = -0.6
    roll_effectiveness: EffectivenessSchedule = EffectivenessSchedule(c2=1.0)
    pitch_effectiveness: EffectivenessSchedule = EffectivenessSchedule(c2=0.8)
    yaw_effectiveness: EffectivenessSchedule = EffectivenessSchedule(c2=0.4)
    # Unmodelled-by-the-controller moments, as angular accelerations.
    reference_airspeed: float = 8.5
    rate_damping: tuple[float, float, float] = (10.0, 6.0, 2.0)  # 1/s at reference airspeed
    pitch_stiffness: float = 25.0  # rad/s^2 per rad of angle of attack
    weathercock: float = 6.0  # rad/s^2 per rad sideslip
    dihedral: float = 4.0  # rad/s^2 per rad sideslip
    polar: PolarModel = field(default_factory=default_polar)

    def __post_init__(self):
        if self.mass <= 0 or self.wing_area <= 0 or self.air_density <= 0:
            raise ValueError("mass, wing_area and air_density must be positive")
        if self.actuator_tau <= 0 or self.max_thrust <= 0:
            raise ValueError("actuator_tau and max_thrust must be positive")

    @property
    def inertia(self) -> tuple[float, float, float]:
        """Diagonal inertia estimate (kg m^2); informational, the dynamics use accelerations."""
        b = self.wingspan
        return (self.mass * (0.25 * b) ** 2, self.mass * (0.2 * b) ** 2, self.mass * (0.3 * b) ** 2)


@dataclass(frozen=True, slots=True)
class VehicleState:
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    attitude: tuple[float, float, float] = (0.0, 0.0, 0.0)
    rates: tuple[float, float, float] = (0.0, 0.0, 0.0)
    ang_accel: tuple[float, float, float] = (0.0, 0.0, 0.0)
    accel: tuple[float, float, float] = (0.0, 0.0, 0.0)
    actuators: ActuatorVector = ActuatorVector()

    def is_finite(self) -> bool:
        # inf and nan survive summation (overflow of finite values aside)
        return math.isfinite(sum(self.position) + sum(self.velocity) + sum(self.attitude)
                             + sum(self.rates) + sum(self.ang_accel) + sum(self.accel))


def rotation(attitude) -> tuple[tuple[float, ...], ...]:
    """World-from-body rotation matrix as nested tuples (rows)."""
    phi, theta, psi = attitude
    sf, cf = math.sin(phi), math.cos(phi)
    st, ct = math.sin(theta), math.cos(theta)
    sp, cp = math.sin(psi), math.cos(psi)
    return (
        (ct * cp, -(sf * st * cp + cf * sp), -(cf * st * cp - sf * sp)),
        (ct * sp, cf * cp - sf * st * sp, -cf * st * sp - sf * cp),
        (st, sf * ct, cf * ct),
    )


def airspeed(state: VehicleState, wind: WindVector) -> float:
    """Magnitude of ground velocity minus wind velocity."""
    vx, vy, vz = state.velocity
    return math.sqrt((vx + wind.u) ** 2 + vy * vy + (vz - wind.w) ** 2)


def control_effectiveness(config: VehicleConfig, airspeed: float) -> np.ndarray:
    """Diagonal inner-loop effectiveness: (aileron, elevator, rudder) -> (p, q, r) accelerations."""
    v = max(airspeed, 0.0)
    return np.diag([
        config.roll_effectiveness(v),
        config.pitch_effectiveness(v),
        config.yaw_effectiveness(v),
    ])


def thrust_accel(throttle: float, config: VehicleConfig) -> float:
    """Acceleration (m/s^2) along body x for a throttle command in [0, 9600]."""
    if not 0.0 <= throttle <= THROTTLE_MAX:
        warnings.warn(f"throttle {throttle} outside [0, {THROTTLE_MAX:g}], clamped", RuntimeWarning)
        throttle = min(max(throttle, 0.0), THROTTLE_MAX)
    return throttle / THROTTLE_MAX * config.max_thrust / config.mass


def _aero(attitude, air_vel, throttle, config: VehicleConfig):
    """Specific force (without gravity), angle of attack and sideslip."""
    R = rotation(attitude)
    ax, ay, az = air_vel
    V = math.sqrt(ax * ax + ay * ay + az * az)
    bx = (R[0][0], R[1][0], R[2][0])
    by = (R[0][1], R[1][1], R[2][1])
    bz = (R[0][2], R[1][2], R[2][2])
    thrust = throttle / THROTTLE_MAX * config.max_thrust / config.mass
    fx, fy, fz = thrust * bx[0], thrust * bx[1], thrust * bx[2]
    if V < 1e-6:
        return (fx, fy, fz), 0.0, 0.0, V
    ex, ey, ez = ax / V, ay / V, az / V
    vbx = ax * bx[0] + ay * bx[1] + az * bx[2]
    vby = ax * by[0] + ay * by[1] + az * by[2]
    vbz = ax * bz[0] + ay * bz[1] + az * bz[2]
    alpha = math.atan2(-vbz, vbx)
    beta = math.asin(max(-1.0, min(1.0, vby / V)))
    q_s_m = 0.5 * config.air_density * V * V * config.wing_area / config.mass
    cl = config.cl0 + config.cl_alpha * alpha
    cl = min(max(cl, config.cl_min), config.cl_max)

    drag = GRAVITY * sink_rate_extended(config.polar, V) / V
    fx -= drag * ex
    fy -= drag * ey
    fz -= drag * ez

    # lift along body z with the airflow component removed
    d = bz[0] * ex + bz[1] * ey + bz[2] * ez
    nx, ny, nz = bz[0] - d * ex, bz[1] - d * ey, bz[2] - d * ez
    nn = math.sqrt(nx * nx + ny * ny + nz * nz)
    if nn > 1e-9:
        lift = q_s_m * cl / nn
        fx += lift * nx
        fy += lift * ny
        fz += lift * nz

    d = by[0] * ex + by[1] * ey + by[2] * ez
    sx, sy, sz = by[0] - d * ex, by[1] - d * ey, by[2] - d * ez
    ns = math.sqrt(sx * sx + sy * sy + sz * sz)
    if ns > 1e-9:
        side = q_s_m * config.cy_beta * beta / ns
        fx += side * sx
        fy += side * sy
        fz += side * sz
    return (fx, fy, fz), alpha, beta, V


def linear_accel(state: VehicleState, actuators: ActuatorVector, wind: WindVector,
                 config: VehicleConfig) -> tuple[float, float, float]:
    vx, vy, vz = state.velocity
    air = (vx + wind.u, vy, vz - wind.w)
    (fx, fy, fz), _, _, _ = _aero(state.attitude, air, actuators.throttle, config)
    return fx, fy, fz - GRAVITY


def step_dynamics(state: VehicleState, commanded: ActuatorVector, wind: WindVector,
                  config: VehicleConfig, dt: float) -> VehicleState:
    """Advance one step of ``dt`` seconds with semi-implicit Euler."""
    if not 0.0 < dt <= 0.01:
        raise ValueError(f"dt must be in (0, 0.01], got {dt}")
    cmd = commanded.clamped()
    act = state.actuators
    k = 1.0 - math.exp(-dt / config.actuator_tau)
    act = ActuatorVector(
        act.elevator + k * (cmd.elevator - act.elevator),
        act.aileron + k * (cmd.aileron - act.aileron),
        act.rudder + k * (cmd.rudder - act.rudder),
        act.throttle + k * (cmd.throttle - act.throttle),
    )

    vx, vy, vz = state.velocity
    air = (vx + wind.u, vy, vz - wind.w)
    (fx, fy, fz), alpha, beta, V = _aero(state.attitude, air, act.throttle, config)
    acc = (fx, fy, fz - GRAVITY)

    p, q, r = state.rates
    s = V / config.reference_airspeed
    cp_, cq_, cr_ = config.rate_damping
    ga = config.roll_effectiveness(V)
    ge = config.pitch_effectiveness(V)
    gr = config.yaw_effectiveness(V)
    dp = ga * act.aileron - cp_ * s * p + config.dihedral * s * s * beta
    dq = ge * act.elevator - cq_ * s * q - config.pitch_stiffness * s * s * alpha
    dr = gr * act.rudder - cr_ * s * r + config.weathercock * s * s * beta

    vel = (vx + acc[0] * dt, vy + acc[1] * dt, vz + acc[2] * dt)
    x, y, z = state.position
    pos = (x + vel[0] * dt, y + vel[1] * dt, z + vel[2] * dt)
    p, q, r = p + dp * dt, q + dq * dt, r + dr * dt

    phi, theta, psi = state.attitude
    sf, cf = math.sin(phi), math.cos(phi)
    ct = math.cos(theta)
    tt = math.tan(theta)
    dphi = p + tt * (sf * q - cf * r)
    dtheta = cf * q + sf * r
    dpsi = (cf * r - sf * q) / ct
    att = (
        wrap_angle(phi + dphi * dt),
        wrap_angle(theta + dtheta * dt),
        wrap_angle(psi + dpsi * dt),
    )
    new = VehicleState(pos, vel, att, (p, q, r), (dp, dq, dr), acc, act)
    if not new.is_finite():
        raise SimulationFault(f"non-finite state after step: {new}")
    return new


def mechanical_energy(state: VehicleState, config: VehicleConfig) -> float:
    vx, vy, vz = state.velocity
    return config.mass * (0.5 * (vx * vx + vy * vy + vz * vz) + GRAVITY * state.position[2])


def hover_throttle_fraction(wind: WindVector, config: VehicleConfig) -> float:
    """Point-mass estimate of the thrust fraction needed to hold station.

    Along the air-relative path, T = m g (sink(V) - w) / V. Negative values
    mean the updraft exceeds what zero throttle can balance.
    """
    V = math.hypot(wind.u, wind.w)
    s = sink_rate_extended(config.polar, V)
    return config.mass * GRAVITY * (s - wind.w) / V / config.max_thrust


def trim_station_keeping(wind: WindVector, config: VehicleConfig) -> tuple[float, float]:
    """Pitch (rad) and throttle command holding zero ground velocity, wings level, facing +x.

    Solves the full force balance (lift, drag, thrust along the body axis)
    rather than the point-mass estimate. Throttle may come out negative when
    the updraft is in excess; the caller decides what that means.
    """
    from scipy.optimize import fsolve

    V = math.hypot(wind.u, wind.w)
    air = (wind.u, 0.0, -wind.w)

    def residual(z):
        theta, frac = z
        (fx, _, fz), _, _, _ = _aero((0.0, theta, 0.0), air, frac * THROTTLE_MAX, config)
        return [fx, fz - GRAVITY]

    q_s_m = 0.5 * config.air_density * V * V * config.wing_area / config.mass
    gamma = math.atan2(-wind.w, wind.u)
    theta0 = gamma + (GRAVITY / q_s_m - config.cl0) / config.cl_alpha
    sol, info, ok, msg = fsolve(residual, [theta0, hover_throttle_fraction(wind, config)],
                                full_output=True, xtol=1e-12)
    if ok != 1:
        raise RuntimeError(f"trim did not converge: {msg}")
    return float(sol[0]), float(sol[1] * THROTTLE_MAX)


def calibrate_max_thrust(config: VehicleConfig, speed: float = 8.5, fraction: float = 0.38) -> float:
    """Max thrust that makes station keeping in ``speed`` headwind, no updraft, need ``fraction``."""
    from scipy.optimize import brentq

    wind = WindVector(speed, 0.0)

    def f(tmax):
        _, thr = trim_station_keeping(wind, replace(config, max_thrust=tmax))
        return thr / THROTTLE_MAX - fraction

    return brentq(f, 0.05, 20.0, xtol=1e-10)
