"""Simultaneous gradient play on the bilinear game f1 = xy, f2 = -xy.

One player lowers xy by moving x, the other lowers -xy by moving y, both
from the same pre-update point.  The update is a rotation-plus-stretch, so
instead of settling at the (0, 0) equilibrium the iterates spiral outward
with radius growth sqrt(1 + eta^2) per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class GameState:
    x: float
    y: float
    eta: float
    step: int = 0

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("learning rate must be > 0")

    @property
    def radius(self) -> float:
        return math.hypot(self.x, self.y)


def step(state: GameState) -> GameState:
    """x' = x - eta*y, y' = y + eta*x, both from the pre-update pair."""
    return replace(
        state,
        x=state.x - state.eta * state.y,
        y=state.y + state.eta * state.x,
        step=state.step + 1,
    )


def step_alternating(state: GameState) -> GameState:
    """Comparison mode: update x first, then y sees the new x."""
    x = state.x - state.eta * state.y
    y = state.y + state.eta * x
    return replace(state, x=x, y=y, step=state.step + 1)


def simulate(
    initial: GameState, n_steps: int, *, alternating: bool = False
) -> tuple[list[GameState], list[float]]:
    """Trajectory of n_steps+1 states plus the radius series."""
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    advance = step_alternating if alternating else step
    trajectory = [initial]
    for _ in range(n_steps):
        trajectory.append(advance(trajectory[-1]))
    return trajectory, [s.radius for s in trajectory]
