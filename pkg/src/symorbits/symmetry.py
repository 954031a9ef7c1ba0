"""Reversing symmetries of the restricted five-body problem.

An involution acts body-wise: new ``q_i = P_i q_{pi(i)}`` and new
``v_i = V_i v_{pi(i)}``.  The built-in maps are the isosceles (``Phi``) and
orthogonal (``Psi``) families.  Their blocks mix ``K`` and ``-K`` across
bodies, so they are reversing only on the invariant subspace where the
primaries are antipodal in pairs (``q_3 = -q_1``, ``q_4 = -q_2`` and the same
for velocities).  The super-eight lives on that subspace.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import GRAVITY, K, PotentialLaw, SystemState, nbody_rhs
from .integrate import Trajectory

RESTRICTED_MASSES = (1.0, 1.0, 1.0, 1.0, 0.0)
FIXED_POINT_TOL = 1e-9


class EndpointNotFixedError(ValueError):
    def __init__(self, which: str, residual: float):
        self.residual = residual
        super().__init__(f"{which} endpoint is not a fixed point (residual {residual:.3e})")


@dataclass(frozen=True)
class LinearInvolution:
    name: str
    perm: tuple[int, ...]
    pos_blocks: np.ndarray
    vel_blocks: np.ndarray

    def __post_init__(self):
        perm = tuple(int(i) for i in self.perm)
        P = np.array(self.pos_blocks, dtype=float).reshape(len(perm), 2, 2)
        V = np.array(self.vel_blocks, dtype=float).reshape(len(perm), 2, 2)
        P.setflags(write=False)
        V.setflags(write=False)
        object.__setattr__(self, "perm", perm)
        object.__setattr__(self, "pos_blocks", P)
        object.__setattr__(self, "vel_blocks", V)
        eye = np.eye(2)
        for B in (*P, *V):
            if not np.allclose(B @ B.T, eye, atol=0):
                raise ValueError(f"{self.name}: blocks must be orthogonal")
        if not np.array_equal(self.matrix() @ self.matrix(), np.eye(4 * len(perm))):
            raise ValueError(f"{self.name} is not an involution")

    @property
    def n_bodies(self) -> int:
        return len(self.perm)

    def apply_vector(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        n = self.n_bodies
        q = u[: 2 * n].reshape(n, 2)[list(self.perm)]
        v = u[2 * n :].reshape(n, 2)[list(self.perm)]
        q = np.einsum("ijk,ik->ij", self.pos_blocks, q)
        v = np.einsum("ijk,ik->ij", self.vel_blocks, v)
        return np.concatenate([q.ravel(), v.ravel()])

    def apply(self, state: SystemState) -> SystemState:
        return SystemState.from_vector(state.t, self.apply_vector(state.to_vector()))

    __call__ = apply

    def matrix(self) -> np.ndarray:
        """Dense ``4N x 4N`` view."""
        n = self.n_bodies
        M = np.zeros((4 * n, 4 * n))
        for i, src in enumerate(self.perm):
            M[2 * i:2 * i + 2, 2 * src:2 * src + 2] = self.pos_blocks[i]
            M[2 * n + 2 * i:2 * n + 2 * i + 2, 2 * n + 2 * src:2 * n + 2 * src + 2] = self.vel_blocks[i]
        return M


def involution(name: str, perm, pos_blocks, vel_blocks=None) -> LinearInvolution:
    """Generic block involution; velocity blocks default to ``-P_i``."""
    P = np.asarray(pos_blocks, dtype=float)
    V = -P if vel_blocks is None else np.asarray(vel_blocks, dtype=float)
    return LinearInvolution(name, tuple(perm), P, V)


_SWAP = (1, 0, 3, 2, 4)
_SAME = (0, 1, 2, 3, 4)
_TABLE = {
    # name: (permutation, position-block signs on K for bodies 1..5)
    "Phi1x": (_SWAP, (1, 1, 1, 1, 1)),
    "Phi1y": (_SWAP, (1, 1, 1, 1, -1)),
    "Psi1x": (_SAME, (1, -1, 1, -1, 1)),
    "Psi1y": (_SAME, (1, -1, 1, -1, -1)),
    # same satellite action with the primaries' blocks negated; these fix the
    # primaries half a quarter-cycle later (T0 = (4m+2) * pi/4)
    "Phi2x": (_SWAP, (-1, -1, -1, -1, 1)),
    "Phi2y": (_SWAP, (-1, -1, -1, -1, -1)),
    "Psi2x": (_SAME, (-1, 1, -1, 1, 1)),
    "Psi2y": (_SAME, (-1, 1, -1, 1, -1)),
}
BASE_INVOLUTIONS = ("Phi1x", "Phi1y", "Psi1x", "Psi1y")
NAMES = tuple(_TABLE)


def build(name: str) -> LinearInvolution:
    try:
        perm, signs = _TABLE[name]
    except KeyError:
        raise ValueError(f"unknown involution {name!r}; choose from {NAMES}") from None
    P = np.array([s * K for s in signs])
    return involution(name, perm, P)


def reversing_residual(R: LinearInvolution, u, masses=RESTRICTED_MASSES,
                       law: PotentialLaw = GRAVITY) -> float:
    """``max |R F(u) + F(R u)|``; zero when R reverses the flow at ``u``."""
    F = nbody_rhs(masses, law)
    u = np.asarray(u, dtype=float)
    return float(np.max(np.abs(R.apply_vector(F(0.0, u)) + F(0.0, R.apply_vector(u)))))


def reversing_check(R: LinearInvolution, law: PotentialLaw, trial_states,
                    masses=RESTRICTED_MASSES) -> float:
    worst = 0.0
    for s in trial_states:
        u = s.to_vector() if isinstance(s, SystemState) else s
        worst = max(worst, reversing_residual(R, u, masses, law))
    return worst


def antipodal_states(rng: np.random.Generator, count: int, scale: float = 2.0,
                     min_separation: float = 0.1) -> list[SystemState]:
    """Random collision-free five-body states on the antipodal subspace."""
    out = []
    while len(out) < count:
        q12 = rng.uniform(-scale, scale, (2, 2))
        v12 = rng.uniform(-scale, scale, (2, 2))
        q = np.vstack([q12, -q12, rng.uniform(-2 * scale, 2 * scale, (1, 2))])
        v = np.vstack([v12, -v12, rng.uniform(-scale, scale, (1, 2))])
        d = q[:, None] - q[None]
        r = np.sqrt((d ** 2).sum(-1)) + np.eye(5) * 1e9
        if r.min() > min_separation:
            out.append(SystemState(0.0, q, v))
    return out


def fixed_point_residual(state: SystemState | np.ndarray, R: LinearInvolution) -> float:
    u = state.to_vector() if isinstance(state, SystemState) else np.asarray(state, dtype=float)
    return float(np.max(np.abs(u - R.apply_vector(u))))


def compose_order(R: LinearInvolution, Rhat: LinearInvolution, max_order: int = 24) -> int | None:
    """Smallest ``M`` with ``(Rhat R)**M = id``, or None past ``max_order``."""
    G = Rhat.matrix() @ R.matrix()
    eye = np.eye(G.shape[0])
    power = G.copy()
    for M in range(1, max_order + 1):
        if np.array_equal(power, eye):
            return M
        power = G @ power
    return None


def extend_orbit(half: Trajectory, R: LinearInvolution, Rhat: LinearInvolution,
                 tol: float = FIXED_POINT_TOL, max_order: int = 24) -> Trajectory:
    """Assemble the full period from the segment between two fixed-point sets.

    With ``u(t0) in Fix(R)`` and ``u(t0 + T0) in Fix(Rhat)``:
    ``u(t0 + T0 + s) = Rhat u(t0 + T0 - s)`` and
    ``u(t0 + 2 k T0 + s) = (Rhat R)**k u(t0 + s)``.
    """
    if not half.forward:
        raise ValueError("half segment must be integrated forward in time")
    r0 = fixed_point_residual(half.y[0], R)
    if r0 > tol:
        raise EndpointNotFixedError("initial", r0)
    r1 = fixed_point_residual(half.y[-1], Rhat)
    if r1 > tol:
        raise EndpointNotFixedError("final", r1)
    M = compose_order(R, Rhat, max_order)
    if M is None:
        raise ValueError(f"(Rhat R) has no finite order up to {max_order}")
    t0, T0 = half.t0, half.t_end - half.t0
    G = Rhat.matrix() @ R.matrix()
    powers = [np.linalg.matrix_power(G, k) for k in range(M)]
    Rh = Rhat.matrix()

    def base(s):
        """State at t0 + s for s in [0, 2 T0]."""
        if s <= T0:
            return half.vector_at(t0 + s)
        return Rh @ half.vector_at(t0 + 2 * T0 - s)

    def dense(t):
        s = t - t0
        k = min(int(np.floor(s / (2 * T0))), M - 1)
        k = max(k, 0)
        return powers[k] @ base(s - 2 * k * T0)

    rel = half.t - t0
    mirrored = (2 * T0 - rel[::-1])[1:]
    one = np.concatenate([rel, mirrored])
    ys_one = np.vstack([half.y, (Rh @ half.y[::-1].T).T[1:]])
    times, ys = [], []
    for k in range(M):
        sl = slice(0 if k == 0 else 1, None)
        times.append(t0 + 2 * k * T0 + one[sl])
        ys.append((powers[k] @ ys_one.T).T[sl])
    return Trajectory(np.concatenate(times), np.vstack(ys), dense, half.n_bodies)


def symmetry_relations_residual(traj: Trajectory, R: LinearInvolution, Rhat: LinearInvolution,
                                T0: float, n_grid: int = 64) -> dict:
    """Check the reversing-symmetry relations along a full-period trajectory.

    With ``u(0) in Fix(R)``, ``u(T0) in Fix(Rhat)`` and period ``P = 2 M T0``:
    ``u(P - t) = R u(t)``, ``u(2 T0 - t) = Rhat u(t)`` and
    ``u(2 T0 + t) = (Rhat R) u(t)``, each on ``n_grid`` points.
    """
    M = compose_order(R, Rhat)
    if M is None:
        raise ValueError("(Rhat R) has no finite order")
    t0 = traj.t0
    period = 2 * M * T0
    if traj.t_end - t0 < period * (1 - 1e-12):
        raise ValueError("trajectory shorter than the full period")
    Rm, Rh = R.matrix(), Rhat.matrix()
    G = Rh @ Rm

    def worst(pairs):
        return max(float(np.max(np.abs(traj.vector_at(t0 + a) - B @ traj.vector_at(t0 + b))))
                   for a, b, B in pairs)

    grid_full = np.linspace(0.0, period, n_grid)
    grid_half = np.linspace(0.0, 2 * T0, n_grid)
    grid_shift = np.linspace(0.0, period - 2 * T0, n_grid)
    return {
        "time_reversal": worst((period - s, s, Rm) for s in grid_full),
        "reflection": worst((2 * T0 - s, s, Rh) for s in grid_half),
        "translation": worst((2 * T0 + s, s, G) for s in grid_shift),
    }
