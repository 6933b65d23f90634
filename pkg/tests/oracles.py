"""Independent reference computations the tests compare against."""

import itertools
import math

import numpy as np

from orosoar.vehicle import GRAVITY, ActuatorVector, VehicleState, airspeed, step_dynamics
from orosoar.wind_field import WindVector


def grid_minimum(G, v, W_u, W_v, gamma, u_p, lower, upper, h=1e-2):
    """Brute-force minimum of the WLS cost over a grid of spacing ``h`` inside the box."""
    axes = [np.linspace(lo, hi, max(2, int(math.ceil((hi - lo) / h)) + 1)) for lo, hi in zip(lower, upper)]
    U = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    a = (U - u_p) * W_u
    r = (U @ np.asarray(G).T - v) * W_v
    cost = (a * a).sum(axis=1) + gamma * (r * r).sum(axis=1)
    i = int(np.argmin(cost))
    return float(cost[i]), U[i]


def grid_error_bound(G, W_u, W_v, gamma, h=1e-2):
    """Worst-case cost gap between a box optimum and its nearest grid point.

    The cost is quadratic with Hessian 2H; moving at most h/2 per axis from the
    optimum (where the first-order term is non-negative into the box) costs at
    most (h/2)^2 * n * lambda_max(H).
    """
    G = np.asarray(G)
    H = np.diag(np.asarray(W_u) ** 2) + gamma * G.T @ np.diag(np.asarray(W_v) ** 2) @ G
    n = G.shape[1]
    return (h / 2) ** 2 * n * float(np.linalg.eigvalsh(H)[-1])


def enumerate_box_qp(G, v, W_u, W_v, gamma, u_p, lower, upper):
    """Exact box-QP optimum by trying every free/lower/upper pattern (3^n)."""
    G = np.asarray(G, dtype=float)
    n = G.shape[1]
    A = np.vstack([math.sqrt(gamma) * np.asarray(W_v)[:, None] * G, np.diag(W_u)])
    b = np.concatenate([math.sqrt(gamma) * np.asarray(W_v) * v, np.asarray(W_u) * u_p])
    best = (math.inf, None)
    for pattern in itertools.product((0, -1, 1), repeat=n):
        u = np.zeros(n)
        free = [i for i, p in enumerate(pattern) if p == 0]
        for i, p in enumerate(pattern):
            if p == -1:
                u[i] = lower[i]
            elif p == 1:
                u[i] = upper[i]
        if free:
            rhs = b - A @ u
            u[free] = np.linalg.lstsq(A[:, free], rhs, rcond=None)[0]
        if np.any(u < np.asarray(lower) - 1e-12) or np.any(u > np.asarray(upper) + 1e-12):
            continue
        c = float(np.sum((A @ u - b) ** 2))
        if c < best[0]:
            best = (c, u)
    return best


def glide_trim(V, config, sink):
    """Still-air zero-throttle glide at airspeed V: path angle, pitch, velocity."""
    gamma = math.asin(sink / V)  # descent angle
    q_s_m = 0.5 * config.air_density * V * V * config.wing_area / config.mass
    cl = GRAVITY * math.cos(gamma) / q_s_m
    alpha = (cl - config.cl0) / config.cl_alpha
    return gamma, alpha - gamma, (V * math.cos(gamma), 0.0, -V * math.sin(gamma))


def simulate_glide(V_ref, config, sink_guess, seconds=40.0, dt=0.01):
    """Zero-throttle still-air glide with an airspeed-on-pitch autopilot.

    Returns mean airspeed and mean sink over the last quarter.
    """
    _, theta0, vel = glide_trim(V_ref, config, sink_guess)
    state = VehicleState(position=(0.0, 0.0, 100.0), velocity=vel, attitude=(0.0, theta0, 0.0))
    still = WindVector(0.0, 0.0)
    n = int(seconds / dt)
    speeds, sinks = [], []
    integ = 0.0
    for k in range(n):
        V = airspeed(state, still)
        err = V - V_ref
        integ += err * dt
        theta_ref = theta0 + 0.05 * err + 0.02 * integ
        q = state.rates[1]
        # elevator cancels the angle-of-attack stiffness, plus PD on pitch
        alpha_est = state.attitude[1] - math.atan2(state.velocity[2], state.velocity[0])
        ge = config.pitch_effectiveness(V)
        s = V / config.reference_airspeed
        ele = (config.pitch_stiffness * s * s * alpha_est
               + 30.0 * (theta_ref - state.attitude[1]) - 8.0 * q) / ge
        cmd = ActuatorVector(elevator=ele, throttle=0.0)
        state = step_dynamics(state, cmd, still, config, dt)
        if k >= 3 * n // 4:
            speeds.append(V)
            sinks.append(-state.velocity[2])
    return float(np.mean(speeds)), float(np.mean(sinks))
