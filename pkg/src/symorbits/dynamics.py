"""Planar point-mass dynamics under a homogeneous potential.

Bodies interact through the kernel ``phi_alpha``; a body with zero mass feels
every force but exerts none.  Phase points are stored flat as
``(q_1, ..., q_N, v_1, ..., v_N)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

DEFAULT_COLLISION_RADIUS = 1e-6

K = np.diag([1.0, -1.0])
J = np.array([[0.0, 1.0], [-1.0, 0.0]])


def rotation(angle: float) -> np.ndarray:
    """``exp(angle * J)``; J rotates clockwise."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, s], [-s, c]])


class CollisionError(RuntimeError):
    """Two interacting bodies came closer than the guard radius."""

    def __init__(self, t: float, pair: tuple[int, int], distance: float):
        self.t = t
        self.pair = pair
        self.distance = distance
        super().__init__(
            f"collision between bodies {pair[0] + 1} and {pair[1] + 1} "
            f"at t={t:.15g} (distance {distance:.3e})"
        )


@dataclass(frozen=True)
class PotentialLaw:
    """Homogeneous force law ``|F| ~ r**-alpha``; ``alpha = 1`` is logarithmic."""

    alpha: float = 2.0

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha < 1:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")

    @property
    def is_log(self) -> bool:
        return self.alpha == 1

    def phi(self, lam):
        lam = np.asarray(lam, dtype=float)
        if np.any(lam <= 0):
            raise ValueError("potential kernel is only defined for lambda > 0")
        if self.is_log:
            out = -np.log(lam)
        else:
            out = lam ** (1.0 - self.alpha) / (self.alpha - 1.0)
        return out if out.ndim else float(out)

    def dphi(self, lam):
        """Derivative of the kernel, ``-lam**-alpha`` on both branches."""
        lam = np.asarray(lam, dtype=float)
        out = -(lam ** -self.alpha)
        return out if out.ndim else float(out)


GRAVITY = PotentialLaw(2.0)


def potential_value(lam: float, law: PotentialLaw) -> float:
    return law.phi(lam)


@dataclass(frozen=True)
class SystemState:
    t: float
    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        q = np.array(self.positions, dtype=float).reshape(-1, 2)
        v = np.array(self.velocities, dtype=float).reshape(-1, 2)
        if q.shape != v.shape or q.shape[0] < 1:
            raise ValueError("positions and velocities must both hold N >= 1 planar points")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(v)) and np.isfinite(self.t)):
            raise ValueError("state has non-finite components")
        q.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "positions", q)
        object.__setattr__(self, "velocities", v)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n_bodies(self) -> int:
        return self.positions.shape[0]

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.positions.ravel(), self.velocities.ravel()])

    @classmethod
    def from_vector(cls, t: float, u) -> "SystemState":
        u = np.asarray(u, dtype=float)
        n = u.size // 4
        return cls(t, u[: 2 * n].reshape(n, 2), u[2 * n :].reshape(n, 2))

    def replace_body(self, index: int, position, velocity) -> "SystemState":
        q = self.positions.copy()
        v = self.velocities.copy()
        q[index] = position
        v[index] = velocity
        return SystemState(self.t, q, v)


def as_masses(masses, n: int | None = None) -> np.ndarray:
    m = np.asarray(masses, dtype=float).ravel()
    if np.any(m < 0) or not np.any(m > 0):
        raise ValueError("masses must be nonnegative with at least one positive entry")
    if n is not None and m.size != n:
        raise ValueError(f"expected {n} masses, got {m.size}")
    return m


def _pair_geometry(q: np.ndarray):
    d = q[:, None, :] - q[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", d, d)
    np.fill_diagonal(r2, np.inf)
    return d, r2


def _interacting(m: np.ndarray) -> np.ndarray:
    active = m > 0
    mask = active[:, None] | active[None, :]
    np.fill_diagonal(mask, False)
    return mask


def _guard(r2, mask, guard, t):
    if guard <= 0:
        return
    close = mask & (r2 < guard * guard)
    if np.any(close):
        i, j = np.argwhere(close)[0]
        raise CollisionError(t, (int(min(i, j)), int(max(i, j))), float(np.sqrt(r2[i, j])))


def acceleration_array(q: np.ndarray, m: np.ndarray, alpha: float,
                       guard: float = DEFAULT_COLLISION_RADIUS, t: float = np.nan,
                       mask: np.ndarray | None = None) -> np.ndarray:
    d, r2 = _pair_geometry(q)
    _guard(r2, _interacting(m) if mask is None else mask, guard, t)
    w = m[None, :] * r2 ** (-(alpha + 1.0) / 2.0)
    return -np.einsum("ijk,ij->ik", d, w)


def accelerations(state: SystemState, masses, law: PotentialLaw,
                  guard: float = DEFAULT_COLLISION_RADIUS) -> np.ndarray:
    m = as_masses(masses, state.n_bodies)
    if state.n_bodies == 1:
        return np.zeros((1, 2))
    return acceleration_array(state.positions, m, law.alpha, guard, state.t)


def nbody_rhs(masses, law: PotentialLaw,
              guard: float = DEFAULT_COLLISION_RADIUS) -> Callable[[float, np.ndarray], np.ndarray]:
    """Vector field ``du/dt = (v, a(q))`` for the flat phase point."""
    m = as_masses(masses)
    n = m.size
    alpha = law.alpha
    mask = _interacting(m)
    expo = -(alpha + 1.0) / 2.0

    def rhs(t, u):
        q = u[: 2 * n].reshape(n, 2)
        d = q[:, None, :] - q[None, :, :]
        r2 = np.einsum("ijk,ijk->ij", d, d)
        np.fill_diagonal(r2, np.inf)
        _guard(r2, mask, guard, t)
        a = -np.einsum("ijk,ij->ik", d, m[None, :] * r2**expo)
        return np.concatenate([u[2 * n :], a.ravel()])

    rhs.n_bodies = n
    rhs.masses = m
    rhs.law = law
    return rhs


class Invariants(NamedTuple):
    energy: float
    angular_momentum: float
    linear_momentum: np.ndarray
    center_of_mass: np.ndarray


def conserved_quantities(state: SystemState, masses, law: PotentialLaw,
                         guard: float = DEFAULT_COLLISION_RADIUS) -> Invariants:
    """First integrals over the massive bodies only."""
    m = as_masses(masses, state.n_bodies)
    keep = m > 0
    m, q, v = m[keep], state.positions[keep], state.velocities[keep]
    kinetic = 0.5 * float(np.sum(m * np.sum(v * v, axis=1)))
    potential = 0.0
    for i in range(len(m)):
        for j in range(i + 1, len(m)):
            r = float(np.hypot(*(q[i] - q[j])))
            if r < guard:
                raise CollisionError(state.t, (i, j), r)
            potential -= m[i] * m[j] * law.phi(r)
    ang = float(np.sum(m * (q[:, 0] * v[:, 1] - q[:, 1] * v[:, 0])))
    mom = (m[:, None] * v).sum(axis=0)
    com = (m[:, None] * q).sum(axis=0) / m.sum()
    return Invariants(kinetic + potential, ang, mom, com)


def min_pairwise_distance(state: SystemState, masses=None) -> float:
    """Smallest separation over all pairs, massless bodies included."""
    if state.n_bodies < 2:
        raise ValueError("need at least two bodies")
    _, r2 = _pair_geometry(state.positions)
    return float(np.sqrt(r2.min()))
