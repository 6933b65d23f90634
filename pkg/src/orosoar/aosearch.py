"""Zero-temperature local search over x-z hold positions.

Each evaluated position is held for a dwell; the averaged soaring cost then
decides the next target:

* below threshold: stay (converged);
* cheaper than the previous position: keep going the same way, or pick a
  random direction if the last move was a return;
* not cheaper: go back to the previous position and mark the return.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np


class Direction(Enum):
    FORWARD = (1, 0)
    BACKWARD = (-1, 0)
    UP = (0, 1)
    DOWN = (0, -1)

    @property
    def opposite(self) -> Direction:
        return _OPPOSITE[self]


_OPPOSITE = {
    Direction.FORWARD: Direction.BACKWARD,
    Direction.BACKWARD: Direction.FORWARD,
    Direction.UP: Direction.DOWN,
    Direction.DOWN: Direction.UP,
}
DIRECTIONS = tuple(Direction)


class Phase(str, Enum):
    HOLDING = "holding"
    EVALUATING = "evaluating"
    CONVERGED = "converged"


@dataclass(frozen=True)
class SearchGains:
    k1: float = 9.6  # per throttle percent
    k2: float = 1.6  # per m/s horizontal ground speed
    k3: float = 1.0  # per m/s vertical ground speed
    k4: float = 10.0  # per rad/s pitch rate
    threshold: float = 43.0

    def __post_init__(self):
        if min(self.k1, self.k2, self.k3, self.k4, self.threshold) < 0:
            raise ValueError("search gains and threshold must be non-negative")


@dataclass(frozen=True)
class CostSample:
    throttle_pct: float
    xdot: float
    zdot: float
    pitch_rate: float

    def __post_init__(self):
        if not 0.0 <= self.throttle_pct <= 100.0:
            raise ValueError(f"throttle_pct must be in [0, 100], got {self.throttle_pct}")


@dataclass(frozen=True)
class SafeBox:
    x_min: float
    x_max: float
    z_min: float
    z_max: float

    def __post_init__(self):
        if self.x_min > self.x_max or self.z_min > self.z_max:
            raise ValueError(f"empty safe box: {self}")

    def contains(self, point, tol: float = 1e-9) -> bool:
        x, z = point
        return (self.x_min - tol <= x <= self.x_max + tol) and (self.z_min - tol <= z <= self.z_max + tol)


@dataclass(frozen=True)
class SearchState:
    current_target: tuple[float, float]
    previous_target: tuple[float, float]
    direction: Direction = Direction.DOWN
    returned: bool = False
    previous_cost: float | None = None
    phase: Phase = Phase.HOLDING
    blocked: bool = False  # every direction left the safe box at the last step

    @classmethod
    def start(cls, target) -> SearchState:
        t = (float(target[0]), float(target[1]))
        return cls(current_target=t, previous_target=t)


def search_cost(sample: CostSample, gains: SearchGains) -> float:
    return (gains.k1 * sample.throttle_pct + gains.k2 * abs(sample.xdot)
            + gains.k3 * abs(sample.zdot) + gains.k4 * abs(sample.pitch_rate))


def step_size(cost: float, threshold: float) -> float:
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    if cost >= 3.0 * threshold:
        return 0.3
    if cost >= 2.0 * threshold:
        return 0.2
    if cost >= 1.5 * threshold:
        return 0.1
    return 0.05


def _offset(point, direction: Direction, step: float) -> tuple[float, float]:
    dx, dz = direction.value
    return (point[0] + dx * step, point[1] + dz * step)


def _random_direction(rng: np.random.Generator, exclude=()) -> Direction | None:
    options = [d for d in DIRECTIONS if d not in exclude]
    if not options:
        return None
    return options[int(rng.integers(len(options)))]


def aosearch_step(state: SearchState, new_cost: float, gains: SearchGains,
                  rng: np.random.Generator, safe_box: SafeBox | None = None
                  ) -> tuple[SearchState, tuple[float, float], str]:
    """One search decision after a completed dwell at ``state.current_target``.

    Returns the new state, the next target and an event name: one of
    ``converge``, ``stay``, ``reverse``, ``random-pick``, ``move``,
    ``restart`` or ``hold``.
    """
    here = state.current_target
    if new_cost < gains.threshold:
        event = "stay" if state.phase is Phase.CONVERGED else "converge"
        new = replace(state, phase=Phase.CONVERGED, previous_cost=new_cost,
                      previous_target=here, blocked=False)
        return new, here, event

    step = step_size(new_cost, gains.threshold)

    if state.phase is Phase.CONVERGED or state.previous_cost is None:
        # search (re)start: no usable comparison, pick a random neighbour
        direction = _random_direction(rng)
        event = "restart" if state.phase is Phase.CONVERGED else "random-pick"
        returned = False
    elif new_cost < state.previous_cost:
        if state.returned:
            direction = _random_direction(rng)
            event = "random-pick"
        else:
            direction = state.direction
            event = "move"
        returned = False
    else:
        new = replace(state, current_target=state.previous_target, previous_target=here,
                      direction=state.direction.opposite, returned=True,
                      previous_cost=new_cost, phase=Phase.EVALUATING, blocked=False)
        return new, state.previous_target, "reverse"

    target = _offset(here, direction, step)
    if safe_box is not None and not safe_box.contains(target):
        excluded = [direction]
        while True:
            direction = _random_direction(rng, excluded)
            if direction is None:
                new = replace(state, previous_target=here, previous_cost=new_cost,
                              phase=Phase.EVALUATING, blocked=True, returned=returned)
                return new, here, "hold"
            target = _offset(here, direction, step)
            if safe_box.contains(target):
                break
            excluded.append(direction)

    new = SearchState(current_target=target, previous_target=here, direction=direction,
                      returned=returned, previous_cost=new_cost, phase=Phase.EVALUATING)
    return new, target, event


def dwell_evaluate(times, throttle_pct, xdot, zdot, pitch_rate, start: float,
                   dwell: float = 8.0, settle: float = 3.0) -> CostSample | None:
    """Average a hold window into a cost sample.

    Samples in ``[start + settle, start + dwell]`` count. Returns None while
    the window has not been fully observed.
    """
    times = np.asarray(times, dtype=float)
    if not 0.0 <= settle < dwell:
        raise ValueError("settle must be in [0, dwell)")
    if times.size == 0 or times[-1] < start + dwell - 1e-9:
        return None
    mask = (times >= start + settle - 1e-9) & (times <= start + dwell + 1e-9)
    if not mask.any():
        return None

    def mean_abs(a):
        return float(np.mean(np.abs(np.asarray(a, dtype=float)[mask])))

    thr = float(np.mean(np.asarray(throttle_pct, dtype=float)[mask]))
    return CostSample(min(max(thr, 0.0), 100.0), mean_abs(xdot), mean_abs(zdot), mean_abs(pitch_rate))


def bowl_cost(center, floor: float = 20.0, curvature: float = 150.0):
    """Synthetic convex cost field over (x, z) for exercising the search."""
    cx, cz = center

    def cost(point):
        return floor + curvature * ((point[0] - cx) ** 2 + (point[1] - cz) ** 2)

    return cost


def run_on_field(cost_fn, start, gains: SearchGains, seed: int, safe_box: SafeBox | None = None,
                 max_steps: int = 200) -> tuple[list[tuple[float, float]], list[str], SearchState]:
    """Drive the search on a static cost function; returns visited targets and events."""
    rng = np.random.default_rng(seed)
    state = SearchState.start(start)
    targets = [state.current_target]
    events = []
    for _ in range(max_steps):
        c = cost_fn(state.current_target)
        state, target, event = aosearch_step(state, c, gains, rng, safe_box)
        targets.append(target)
        events.append(event)
        if state.phase is Phase.CONVERGED:
            break
    return targets, events, state
