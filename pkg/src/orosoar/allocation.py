"""Box-constrained weighted least-squares control allocation.

Cost, with ``u`` the control increment:

    C(u) = ||W_u (u - u_p)||^2 + gamma ||W_v (G u - v)||^2,   lower <= u <= upper

solved exactly by a primal active-set method on the stacked least-squares
form ``||A u - b||^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class AllocationError(ValueError):
    pass


@dataclass(frozen=True)
class AllocationWeights:
    """Default weights: pitch objective 100x roll/thrust, unit control weights, gamma 1e6."""

    objective: tuple[float, ...] = (1.0, 100.0, 1.0)
    control: tuple[float, ...] = (1.0, 1.0, 1.0)
    gamma: float = 1e6
    preferred: tuple[float, ...] = (0.0, 0.0, 0.0)


@dataclass
class AllocationProblem:
    """Weights are diagonal and stored as vectors of their diagonal entries."""

    G: np.ndarray
    v: np.ndarray
    W_u: np.ndarray
    W_v: np.ndarray
    gamma: float
    u_p: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.G = np.atleast_2d(np.asarray(self.G, dtype=float))
        m, n = self.G.shape
        self.v = np.asarray(self.v, dtype=float).reshape(m)
        self.W_u = _diag_entries(self.W_u, n, "W_u")
        self.W_v = _diag_entries(self.W_v, m, "W_v")
        self.u_p = np.asarray(self.u_p, dtype=float).reshape(n)
        self.lower = np.asarray(self.lower, dtype=float).reshape(n)
        self.upper = np.asarray(self.upper, dtype=float).reshape(n)
        if not self.gamma > 0:
            raise AllocationError("gamma must be positive")
        if (self.lower > self.upper).any():
            raise AllocationError(f"inverted bounds: lower={self.lower}, upper={self.upper}")

    @property
    def n_controls(self) -> int:
        return self.G.shape[1]

    def stacked(self) -> tuple[np.ndarray, np.ndarray]:
        sw = np.sqrt(self.gamma) * self.W_v
        A = np.vstack([sw[:, None] * self.G, np.diag(self.W_u)])
        b = np.concatenate([sw * self.v, self.W_u * self.u_p])
        return A, b

    def cost(self, u) -> float:
        u = np.asarray(u, dtype=float)
        a = self.W_u * (u - self.u_p)
        r = self.W_v * (self.G @ u - self.v)
        return float(a @ a + self.gamma * (r @ r))

    def gradient(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        r = self.G @ u - self.v
        return 2.0 * (self.W_u**2 * (u - self.u_p) + self.gamma * self.G.T @ (self.W_v**2 * r))


def _diag_entries(w, size: int, name: str) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim == 2:
        if w.shape != (size, size) or np.any(w - np.diag(np.diag(w))):
            raise AllocationError(f"{name} must be a diagonal {size}x{size} matrix")
        w = np.diag(w).copy()
    if w.shape != (size,):
        raise AllocationError(f"{name} must have {size} diagonal entries, got shape {w.shape}")
    if (w <= 0).any():
        raise AllocationError(f"{name} must have positive diagonal entries")
    return w


@dataclass
class AllocationSolution:
    u: np.ndarray
    active_set: tuple[int, ...]  # +1 upper bound active, -1 lower, 0 free
    iterations: int
    cost: float
    converged: bool = True
    unreachable_objectives: tuple[int, ...] = field(default_factory=tuple)

    @property
    def degraded(self) -> bool:
        return not self.converged


def build_allocation_problem(v_wls, G_o, current_u, limits, weights: AllocationWeights | None = None
                             ) -> AllocationProblem:
    """Allocation problem in increment space.

    ``limits`` is a sequence of (low, high) absolute limits per control; the
    increment box is ``[low - current, high - current]``.
    """
    weights = weights or AllocationWeights()
    limits = np.asarray(limits, dtype=float)
    current = np.asarray(current_u, dtype=float)
    if limits.shape != (len(current), 2):
        raise AllocationError(f"limits must have shape ({len(current)}, 2)")
    if np.any(limits[:, 0] > limits[:, 1]):
        raise AllocationError(f"inverted actuator limits: {limits.tolist()}")
    if not (np.isfinite(current).all() and np.isfinite(v_wls).all() and np.isfinite(G_o).all()):
        raise AllocationError("non-finite allocation input")
    lower = limits[:, 0] - current
    upper = limits[:, 1] - current
    return AllocationProblem(
        G=G_o, v=v_wls, W_u=weights.control, W_v=weights.objective, gamma=weights.gamma,
        u_p=weights.preferred, lower=lower, upper=upper,
    )


DEFAULT_MAX_ITERATIONS = 100


def wls_solve(problem: AllocationProblem, max_iterations: int = DEFAULT_MAX_ITERATIONS) -> AllocationSolution:
    """Primal active-set solve of the WLS allocation problem.

    Three controls usually need one to four iterations; an unfinished solve
    returns the last feasible iterate with ``converged=False``.
    """
    n = problem.n_controls
    A, b = problem.stacked()
    lo, hi = problem.lower, problem.upper

    # start from the clipped unconstrained optimum
    u_free = np.linalg.lstsq(A, b, rcond=None)[0]
    u = np.clip(u_free, lo, hi)
    # W[i]: 0 free, -1 held at lower bound, +1 held at upper bound
    W = np.zeros(n, dtype=int)
    W[u_free <= lo] = -1
    W[(u_free >= hi) & (W == 0)] = 1
    W[lo == hi] = -1

    unreachable = tuple(int(i) for i in np.flatnonzero(~problem.G.any(axis=1)))
    converged = False
    it = 0
    while it < max_iterations:
        it += 1
        free = W == 0
        if it == 1 and free.all():
            p = u_free - u
        else:
            p = np.zeros(n)
            if free.any():
                p[free] = np.linalg.lstsq(A[:, free], b - A @ u, rcond=None)[0]
        u_try = u + p
        if (u_try[free] >= lo[free]).all() and (u_try[free] <= hi[free]).all():
            u = u_try
            # half-gradient of ||A u - b||^2; sign-adjusted multipliers of the held bounds
            g = A.T @ (A @ u - b)
            lam = -W * g  # >= 0 when optimal
            held = W != 0
            fixed = lo == hi
            cand = held & ~fixed & (lam < 0)
            if not cand.any():
                converged = True
                break
            # release the most negative multiplier; lowest index on ties
            idx = np.flatnonzero(cand)
            W[idx[np.argmin(lam[idx])]] = 0
        else:
            # step to the first blocking bound
            alpha = 1.0
            block = -1
            block_side = 0
            for i in np.flatnonzero(free):
                if p[i] < 0 and u_try[i] < lo[i]:
                    a = (lo[i] - u[i]) / p[i]
                    side = -1
                elif p[i] > 0 and u_try[i] > hi[i]:
                    a = (hi[i] - u[i]) / p[i]
                    side = 1
                else:
                    continue
                if a < alpha:
                    alpha, block, block_side = a, i, side
            u = u + max(alpha, 0.0) * p
            if block >= 0:
                W[block] = block_side
                u[block] = lo[block] if block_side < 0 else hi[block]
    u = np.clip(u, lo, hi)
    return AllocationSolution(
        u=u,
        active_set=tuple(int(w) for w in W),
        iterations=it,
        cost=problem.cost(u),
        converged=converged,
        unreachable_objectives=unreachable,
    )


def kkt_residual(problem: AllocationProblem, u, tol_bound: float = 1e-12) -> float:
    """Largest scaled violation of the box KKT conditions at ``u``.

    Free components need zero gradient; components at the lower bound need a
    non-negative gradient and at the upper bound a non-positive one. Scaled by
    the gradient magnitude of the cost's two terms so that it is unit-free.
    """
    u = np.asarray(u, dtype=float)
    g = problem.gradient(u)
    A, b = problem.stacked()
    scale = 2.0 * (np.abs(A.T) @ (np.abs(A) @ np.abs(u) + np.abs(b))) + 1.0
    at_lo = u <= problem.lower + tol_bound
    at_hi = u >= problem.upper - tol_bound
    viol = np.where(at_lo & at_hi, 0.0,
                    np.where(at_lo, np.maximum(-g, 0.0),
                             np.where(at_hi, np.maximum(g, 0.0), np.abs(g))))
    return float(np.max(viol / scale))
