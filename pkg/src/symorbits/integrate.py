"""Adaptive propagation with dense output.

Backed by scipy's DOP853 (8th order, embedded 5th/3rd order error estimate,
7th order continuous extension).  Collisions abort the run: the vector field
raises :class:`~symorbits.dynamics.CollisionError` from inside the step.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .dynamics import (
    DEFAULT_COLLISION_RADIUS,
    PotentialLaw,
    SystemState,
    nbody_rhs,
)


class StepSizeError(RuntimeError):
    """The step size underflowed before reaching the end time."""


class OutOfSpanError(ValueError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    max_step: float = np.inf
    collision_radius: float = DEFAULT_COLLISION_RADIUS
    method: str = "DOP853"

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.max_step > 0):
            raise ValueError("tolerances and max_step must be positive")
        if self.collision_radius < 0:
            raise ValueError("collision_radius must be nonnegative")


class Trajectory:
    """Accepted steps of a propagation plus an interpolant between them.

    ``t`` is monotone in the direction of integration.  ``dense`` maps a time
    inside the span to a flat phase vector.
    """

    def __init__(self, t, y, dense: Callable[[float], np.ndarray] | None, n_bodies: int):
        self.t = np.asarray(t, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.dense = dense
        self.n_bodies = n_bodies
        self.t.setflags(write=False)
        self.y.setflags(write=False)

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def forward(self) -> bool:
        return self.t_end >= self.t0

    def state(self, i: int) -> SystemState:
        return SystemState.from_vector(self.t[i], self.y[i])

    @property
    def final_state(self) -> SystemState:
        return self.state(-1)

    def vector_at(self, t: float) -> np.ndarray:
        lo, hi = sorted((self.t0, self.t_end))
        span = max(hi - lo, 1.0)
        if not (lo - 1e-12 * span <= t <= hi + 1e-12 * span):
            raise OutOfSpanError(f"t={t} outside trajectory span [{lo}, {hi}]")
        ts = self.t if self.forward else self.t[::-1]
        k = int(np.searchsorted(ts, t))
        if k < ts.size and ts[k] == t:
            return self.y[k if self.forward else ts.size - 1 - k].copy()
        if self.dense is None:
            raise OutOfSpanError("trajectory has no interpolant")
        return np.asarray(self.dense(t), dtype=float)

    def vectors_at(self, times) -> np.ndarray:
        return np.array([self.vector_at(float(s)) for s in np.atleast_1d(times)])

    def __len__(self):
        return self.t.size


def propagate_vector(rhs: Callable, t0: float, y0, t_end: float,
                     config: IntegratorConfig = IntegratorConfig(), n_bodies: int = 0) -> Trajectory:
    """Integrate a flat vector field from ``t0`` to exactly ``t_end`` (either direction)."""
    if t_end == t0:
        raise ValueError("t_end must differ from the initial time")
    sol = solve_ivp(
        rhs,
        (t0, t_end),
        np.asarray(y0, dtype=float),
        method=config.method,
        rtol=config.rel_tol,
        atol=config.abs_tol,
        max_step=config.max_step,
        dense_output=True,
    )
    if sol.status != 0:
        raise StepSizeError(f"integration stopped at t={sol.t[-1]:.15g}: {sol.message}")
    return Trajectory(sol.t, sol.y.T, sol.sol, n_bodies)


def propagate(rhs: Callable, state0: SystemState, t_end: float,
              config: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    return propagate_vector(rhs, state0.t, state0.to_vector(), t_end, config, state0.n_bodies)


def propagate_bodies(state0: SystemState, masses, law: PotentialLaw, t_end: float,
                     config: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    rhs = nbody_rhs(masses, law, guard=config.collision_radius)
    return propagate(rhs, state0, t_end, config)


def sample(traj: Trajectory, t: float) -> SystemState:
    return SystemState.from_vector(t, traj.vector_at(t))


def uniform_samples(traj: Trajectory, n: int, endpoint: bool = True):
    times = np.linspace(traj.t0, traj.t_end, n, endpoint=endpoint)
    return times, traj.vectors_at(times)
