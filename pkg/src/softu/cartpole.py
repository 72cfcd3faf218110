"""Cartpole environment with the canonical benchmark physics.

Euler integration at dt=0.02 with gravity 9.8, cart mass 1.0, pole mass 0.1,
pole half-length 0.5, and a +/-10 N force. Position-like quantities update
with the old velocities (semi-implicit would change the trajectories).
An episode ends when |x| > 2.4 m, |theta| > 12 degrees, or after 500 steps.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import cos, pi, sin

import numpy as np

GRAVITY = 9.8
CART_MASS = 1.0
POLE_MASS = 0.1
TOTAL_MASS = CART_MASS + POLE_MASS
POLE_HALF_LENGTH = 0.5
POLE_MASS_LENGTH = POLE_MASS * POLE_HALF_LENGTH
FORCE_MAG = 10.0
DT = 0.02
X_LIMIT = 2.4
THETA_LIMIT = 12.0 * 2.0 * pi / 360.0
MAX_STEPS = 500

LEFT, RIGHT = 0, 1


@dataclass(frozen=True)
class CartpoleState:
    x: float
    v: float
    theta: float
    omega: float
    step_count: int = 0

    def features(self) -> np.ndarray:
        return np.array([self.x, self.v, self.theta, self.omega])


def is_terminal(state: CartpoleState) -> bool:
    return (
        abs(state.x) > X_LIMIT
        or abs(state.theta) > THETA_LIMIT
        or state.step_count >= MAX_STEPS
    )


def env_reset(seed: int) -> CartpoleState:
    """Fresh episode: all four features uniform on [-0.05, 0.05]."""
    vals = np.random.default_rng(seed).uniform(-0.05, 0.05, 4)
    return CartpoleState(float(vals[0]), float(vals[1]), float(vals[2]), float(vals[3]), 0)


def env_step(state: CartpoleState, action: int) -> tuple[CartpoleState, float, bool]:
    """One Euler step under a left/right push; reward is 1.0 per step."""
    if is_terminal(state):
        raise ValueError("cannot step a terminal state")
    if action not in (LEFT, RIGHT):
        raise ValueError(f"action must be {LEFT} (left) or {RIGHT} (right)")
    force = FORCE_MAG if action == RIGHT else -FORCE_MAG
    cos_t, sin_t = cos(state.theta), sin(state.theta)
    temp = (force + POLE_MASS_LENGTH * state.omega**2 * sin_t) / TOTAL_MASS
    theta_acc = (GRAVITY * sin_t - cos_t * temp) / (
        POLE_HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos_t**2 / TOTAL_MASS)
    )
    x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_t / TOTAL_MASS
    nxt = CartpoleState(
        x=state.x + DT * state.v,
        v=state.v + DT * x_acc,
        theta=state.theta + DT * state.omega,
        omega=state.omega + DT * theta_acc,
        step_count=state.step_count + 1,
    )
    return nxt, 1.0, is_terminal(nxt)
