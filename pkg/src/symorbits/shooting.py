"""Two-unknown shooting for symmetric periodic orbits of the satellite.

The satellite starts on the x-axis with perpendicular velocity,
``q_5 = (a, 0)``, ``v_5 = (0, b)``, next to the super-eight at a reversible
configuration.  Half a symmetric orbit later (time ``T0``) it must cross an
axis perpendicularly; the two violated components form the residual.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import symmetry
from .configs import (
    QUARTER,
    ChoreographyEphemeris,
    ConvergenceError,
    SingularJacobianError,
    ephemeris,
    super_eight_isosceles,
    super_eight_orthogonal,
)
from .dynamics import GRAVITY, CollisionError, SystemState, as_masses
from .frames import comet_seed, moon_seed
from .integrate import (
    IntegratorConfig,
    StepSizeError,
    Trajectory,
    propagate_bodies,
    propagate_vector,
)

log = logging.getLogger(__name__)

MASSES = symmetry.RESTRICTED_MASSES
FAMILIES = ("isosceles", "orthogonal")
TARGETS = ("x", "y")
PRIMARY_MODES = ("ephemeris", "cointegrated")
COMET_THRESHOLD = 2.0
MOON_THRESHOLD = 0.5


class ShootingError(RuntimeError):
    pass


def t0_fraction(T0: float) -> Fraction:
    """``T0`` as an exact multiple of pi/4, or ValueError."""
    k = T0 / QUARTER
    kr = round(k)
    if T0 <= 0 or abs(k - kr) > 1e-9 * max(1.0, abs(k)) or kr == 0:
        raise ValueError(f"T0={T0!r} is not a positive multiple of pi/4")
    return Fraction(kr, 4)


def t0_label(T0: float) -> str:
    f = t0_fraction(T0)
    num = "" if f.numerator == 1 else str(f.numerator)
    return f"{num}pi" if f.denominator == 1 else f"{num}pi/{f.denominator}"


@dataclass(frozen=True)
class ShootingProblem:
    family: str
    T0: float
    target: str = "y"
    config: IntegratorConfig = IntegratorConfig()
    primaries_mode: str = "cointegrated"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}")
        if self.primaries_mode not in PRIMARY_MODES:
            raise ValueError(f"primaries_mode must be one of {PRIMARY_MODES}")
        t0_fraction(self.T0)

    @property
    def quarter_steps(self) -> int:
        """``T0`` in units of pi/4."""
        return int(t0_fraction(self.T0) * 4)

    @property
    def combination(self) -> int | None:
        """1 for ``T0 = 4m pi/4``, 2 for ``T0 = (4m+2) pi/4``, None otherwise."""
        k = self.quarter_steps % 4
        return {0: 1, 2: 2}.get(k)

    @property
    def start_symmetry(self) -> str:
        return "Phi1x" if self.family == "isosceles" else "Psi1x"

    @property
    def end_symmetry(self) -> str | None:
        if self.combination is None:
            return None
        head = "Phi" if self.family == "isosceles" else "Psi"
        return f"{head}{self.combination}{self.target}"

    def primaries(self) -> SystemState:
        ic = super_eight_isosceles() if self.family == "isosceles" else super_eight_orthogonal()
        # time is measured from the reversible configuration
        return SystemState(0.0, ic.state.positions, ic.state.velocities)

    def ephemeris(self) -> ChoreographyEphemeris:
        return ephemeris(self.family, self.config)

    def initial_state(self, a: float, b: float) -> SystemState:
        p = self.primaries()
        return SystemState(0.0, np.vstack([p.positions, [[a, 0.0]]]),
                           np.vstack([p.velocities, [[0.0, b]]]))


def satellite_rhs(eph: ChoreographyEphemeris, offset: float, masses=MASSES[:4], law=GRAVITY,
                  guard: float = IntegratorConfig().collision_radius):
    """Satellite field ``(q5, v5)`` in the prescribed primaries' field."""
    m = as_masses(masses, 4)
    expo = -(law.alpha + 1.0) / 2.0

    def rhs(t, z):
        prim = eph.positions(t + offset)
        d = z[:2] - prim
        r2 = np.einsum("ij,ij->i", d, d)
        if guard > 0 and r2.min() < guard * guard:
            j = int(r2.argmin())
            raise CollisionError(t, (j, 4), float(np.sqrt(r2[j])))
        acc = -(d * (m * r2 ** expo)[:, None]).sum(axis=0)
        return np.array([z[2], z[3], acc[0], acc[1]])

    return rhs


def _assemble(sat: Trajectory, eph: ChoreographyEphemeris, offset: float) -> Trajectory:
    """Five-body trajectory from a satellite run plus the ephemeris."""

    def merge(t, z):
        p = eph.vector(t + offset)
        return np.concatenate([p[:8], z[:2], p[8:], z[2:]])

    ys = np.array([merge(t, z) for t, z in zip(sat.t, sat.y)])
    return Trajectory(sat.t, ys, lambda t: merge(t, sat.dense(t)), 5)


def propagate_restricted(problem: "ShootingProblem", a: float, b: float, t_end: float) -> Trajectory:
    """Five-body trajectory of the problem's initial state up to ``t_end``."""
    u0 = problem.initial_state(a, b)
    if problem.primaries_mode == "cointegrated":
        return propagate_bodies(u0, MASSES, GRAVITY, t_end, problem.config)
    eph = problem.ephemeris()
    rhs = satellite_rhs(eph, eph.t0, guard=problem.config.collision_radius)
    z0 = np.array([a, 0.0, 0.0, b])
    sat = propagate_vector(rhs, 0.0, z0, t_end, problem.config, 1)
    return _assemble(sat, eph, eph.t0)


def _select(problem: ShootingProblem, u: np.ndarray) -> np.ndarray:
    q5, v5 = u[8:10], u[18:20]
    if problem.target == "x":
        return np.array([q5[1], v5[0]])
    return np.array([q5[0], v5[1]])


def shoot(problem: ShootingProblem, a: float, b: float) -> Trajectory:
    return propagate_restricted(problem, a, b, problem.T0)


def residual(problem: ShootingProblem, a: float, b: float) -> np.ndarray:
    """Constrained satellite components at ``T0``; the free pair is logged."""
    u = shoot(problem, a, b).y[-1]
    free = u[[8, 19]] if problem.target == "x" else u[[9, 18]]
    log.debug("T0=%s a=%.15g b=%.15g free components %s", t0_label(problem.T0), a, b, free)
    return _select(problem, u)


@dataclass(frozen=True)
class NewtonConfig:
    tol: float = 1e-10
    max_iter: int = 20
    fd_rel_step: float = 1e-7
    max_halvings: int = 15
    min_step: float = 1e-14
    polish_below: float = 1e-7


@dataclass
class OrbitRecord:
    family: str
    target: str
    T0: float
    T0_label: str
    a: float
    b: float
    residual_norm: float
    iterations: int
    residual_history: list[float]
    period: float
    closure_residual: float
    classification: str
    min_primary_distance: list[float]
    mean_radius: float
    min_radius: float
    max_distance_to_nearest: list[float]
    primary_extent: float
    min_interprimary_distance: float
    comet_threshold: float = COMET_THRESHOLD
    moon_threshold: float = MOON_THRESHOLD
    start_symmetry: str = ""
    end_symmetry: str | None = None
    rel_tol: float = 1e-12
    primaries_mode: str = "cointegrated"
    verify_mode: str = "ephemeris"
    seconds: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def problem(self) -> ShootingProblem:
        return ShootingProblem(self.family, self.T0, self.target,
                               IntegratorConfig(rel_tol=self.rel_tol), self.primaries_mode)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "OrbitRecord":
        return cls(**d)


def _newton_jacobian(problem, x, r, h_rel, central):
    jac = np.empty((2, 2))
    for k in range(2):
        h = h_rel * max(1.0, abs(x[k]))
        e = np.zeros(2)
        e[k] = h
        rp = residual(problem, *(x + e))
        if central:
            rm = residual(problem, *(x - e))
            jac[:, k] = (rp - rm) / (2 * h)
        else:
            jac[:, k] = (rp - r) / h
    return jac


def newton(problem: ShootingProblem, guess, cfg: NewtonConfig = NewtonConfig()):
    """Damped Newton with finite-difference Jacobian; returns (x, history)."""
    x = np.array(guess, dtype=float)
    try:
        r = residual(problem, *x)
    except (CollisionError, StepSizeError) as exc:
        raise ShootingError(f"initial guess fails: {exc}") from exc
    norm = float(np.max(np.abs(r)))
    if not np.isfinite(norm):
        raise ShootingError("initial residual is not finite")
    history = [norm]
    for _ in range(cfg.max_iter):
        if norm <= cfg.tol:
            return x, history
        jac = _newton_jacobian(problem, x, r, cfg.fd_rel_step, central=norm < cfg.polish_below)
        if not np.all(np.isfinite(jac)) or abs(np.linalg.det(jac)) < 1e-14 * max(1.0, np.abs(jac).max() ** 2):
            raise SingularJacobianError(f"singular shooting Jacobian at a={x[0]}, b={x[1]}")
        step = np.linalg.solve(jac, -r)
        lam = 1.0
        for _ in range(cfg.max_halvings + 1):
            trial = x + lam * step
            try:
                r_trial = residual(problem, *trial)
                n_trial = float(np.max(np.abs(r_trial)))
            except (CollisionError, StepSizeError):
                n_trial = np.inf
            if n_trial < norm:
                break
            lam /= 2
            if lam * np.max(np.abs(step)) < cfg.min_step:
                break
        else:
            n_trial = np.inf
        if not n_trial < norm:
            raise ConvergenceError(f"line search stalled at residual {norm:.3e} (a={x[0]}, b={x[1]})")
        x, r, norm = trial, r_trial, n_trial
        history.append(norm)
    if norm <= cfg.tol:
        return x, history
    raise ConvergenceError(f"no convergence after {cfg.max_iter} iterations (residual {norm:.3e})")


def full_period(problem: ShootingProblem) -> float:
    if problem.end_symmetry is None:
        return 4 * problem.T0
    M = symmetry.compose_order(symmetry.build(problem.start_symmetry), symmetry.build(problem.end_symmetry))
    return 2 * M * problem.T0


def orbit_statistics(traj: Trajectory, n_samples: int = 2048) -> dict:
    times = np.linspace(traj.t0, traj.t_end, n_samples)
    u = traj.vectors_at(times)
    prim = u[:, :8].reshape(-1, 4, 2)
    sat = u[:, 8:10]
    dist = np.linalg.norm(sat[:, None, :] - prim, axis=2)
    com = prim.mean(axis=1)
    extent = float(np.linalg.norm(prim, axis=2).max())
    pd = np.linalg.norm(prim[:, :, None, :] - prim[:, None, :, :], axis=3)
    pd[:, np.arange(4), np.arange(4)] = np.inf
    return dict(
        min_primary_distance=dist.min(axis=0).tolist(),
        max_distance_to_nearest=dist.max(axis=0).tolist(),
        mean_radius=float(np.linalg.norm(sat - com, axis=1).mean()),
        min_radius=float(np.linalg.norm(sat - com, axis=1).min()),
        primary_extent=extent,
        min_interprimary_distance=float(pd.min()),
    )


def classify(record: OrbitRecord) -> str:
    """Comet, moon or other, from the sampled distance statistics on the record.

    Comet: the satellite stays farther than ``comet_threshold`` times the
    primaries' extent from every primary.  Moon: it stays within
    ``moon_threshold`` times the smallest primary separation of one primary.
    """
    if min(record.min_primary_distance) > record.comet_threshold * record.primary_extent:
        return "comet"
    if min(record.max_distance_to_nearest) < record.moon_threshold * record.min_interprimary_distance:
        return "moon"
    return "other"


def solve(problem: ShootingProblem, guess, newton_cfg: NewtonConfig = NewtonConfig(),
          return_trajectory: bool = False, verify_mode: str = "ephemeris"):
    """Newton solve at ``T0``, then one direct integration over the full period.

    The verification run defaults to the ephemeris primaries: co-integrated
    super-eight primaries leave the choreography within a few periods.
    """
    start = time.perf_counter()
    x, history = newton(problem, guess, newton_cfg)
    period = full_period(problem)
    check = replace(problem, primaries_mode=verify_mode)
    try:
        full = propagate_restricted(check, x[0], x[1], period)
    except (CollisionError, StepSizeError) as exc:
        raise ShootingError(f"verification integration failed: {exc}") from exc
    closure = float(np.max(np.abs(full.y[-1] - full.y[0])))
    stats = orbit_statistics(full)
    notes = []
    if problem.end_symmetry is None:
        notes.append("T0 is an odd multiple of pi/4: no built-in end symmetry")
    record = OrbitRecord(
        family=problem.family, target=problem.target, T0=problem.T0, T0_label=t0_label(problem.T0),
        a=float(x[0]), b=float(x[1]), residual_norm=history[-1], iterations=len(history) - 1,
        residual_history=history, period=period, closure_residual=closure, classification="",
        start_symmetry=problem.start_symmetry, end_symmetry=problem.end_symmetry,
        rel_tol=problem.config.rel_tol, primaries_mode=problem.primaries_mode,
        verify_mode=verify_mode, notes=notes, **stats,
    )
    record.classification = classify(record)
    record.seconds = time.perf_counter() - start
    return (record, full) if return_trajectory else record


def seed(problem: ShootingProblem, kind: str = "auto", windings: float | None = None):
    """Analytic starting guess: circular Kepler orbit about the total mass
    (comet) or about body 1 (moon, needs the number of windings in ``T0``)."""
    if kind == "auto":
        kind = "comet" if problem.family == "isosceles" else "moon"
    if kind == "comet":
        a, b = comet_seed(problem.T0, float(np.sum(as_masses(MASSES))), GRAVITY)
        return np.array([a, b])
    if kind == "moon":
        if windings is None:
            raise ValueError("moon seed needs the number of windings about body 1 in T0")
        p = problem.primaries()
        sep, speed = moon_seed(problem.T0, 1.0, windings=windings)
        return np.array([p.positions[0, 0] + sep, p.velocities[0, 1] + speed])
    raise ValueError(f"unknown seed kind {kind!r}")


# --- published data -----------------------------------------------------------

@dataclass(frozen=True)
class TableRow:
    row: int
    family: str
    T0_fraction: Fraction  # in units of pi
    a: float
    b: float
    windings: float | None = None

    @property
    def T0(self) -> float:
        return float(self.T0_fraction) * math.pi


# row 6: the published moon circles body 1 39 quarter-turns in T0 (relative
# period 2 pi * 0.0871 / 3.382 against T0 = pi/2)
TABLE1 = (
    TableRow(1, "isosceles", Fraction(2), 4.116104103490420, 1.044999754887220),
    TableRow(2, "isosceles", Fraction(5, 2), 4.742060123223827, 0.958945634262276),
    TableRow(3, "isosceles", Fraction(3), 5.330615961036938, 0.896037359621114),
    TableRow(4, "isosceles", Fraction(7, 2), 5.889293694917488, 0.847128753375993),
    TableRow(5, "isosceles", Fraction(4), 6.423300718815878, 0.807515201172657),
    TableRow(6, "orthogonal", Fraction(1, 2), 1.469992697921058, 3.966907060848269, windings=39 / 4),
)


@dataclass
class RowResult:
    row: int
    published: tuple[float, float]
    record: OrbitRecord | None
    error: float | None
    seconds: float
    failure: str | None = None

    @property
    def ok(self) -> bool:
        return self.record is not None and self.error is not None


@dataclass
class Table1Report:
    rows: list[RowResult]

    def max_error(self) -> float:
        return max((r.error for r in self.rows if r.error is not None), default=np.inf)

    def all_within(self, tol: float = 1e-9) -> bool:
        return all(r.ok and r.error <= tol for r in self.rows)


def reproduce_table1(config: IntegratorConfig = IntegratorConfig(), rows=None,
                     newton_cfg: NewtonConfig = NewtonConfig(), target: str = "y") -> Table1Report:
    """Solve each published row from its analytic seed and compare."""
    out = []
    for row in TABLE1:
        if rows is not None and row.row not in rows:
            continue
        start = time.perf_counter()
        problem = ShootingProblem(row.family, row.T0, target, config)
        try:
            guess = seed(problem, "comet" if row.family == "isosceles" else "moon", row.windings)
            record = solve(problem, guess, newton_cfg)
            err = max(abs(record.a - row.a), abs(record.b - row.b))
            out.append(RowResult(row.row, (row.a, row.b), record, err, time.perf_counter() - start))
        except (ShootingError, ConvergenceError, CollisionError, StepSizeError) as exc:
            out.append(RowResult(row.row, (row.a, row.b), None, None,
                                 time.perf_counter() - start, failure=str(exc)))
    return Table1Report(out)


@dataclass
class SweepItem:
    T0: float
    record: OrbitRecord | None
    failure: str | None = None


def sweep(T0_values, seeding: str = "kepler", family: str = "isosceles", target: str = "y",
          config: IntegratorConfig = IntegratorConfig(), newton_cfg: NewtonConfig = NewtonConfig(),
          windings: float | None = None) -> list[SweepItem]:
    """Solve a list of half-periods; ``warm-start`` reuses the previous solution."""
    if seeding not in ("kepler", "warm-start"):
        raise ValueError("seeding must be 'kepler' or 'warm-start'")
    items = []
    previous = None
    for T0 in sorted(T0_values):
        problem = ShootingProblem(family, T0, target, config)
        if seeding == "warm-start" and previous is not None:
            guess = previous
        else:
            guess = seed(problem, "comet" if family == "isosceles" else "moon", windings)
        try:
            rec = solve(problem, guess, newton_cfg)
            previous = np.array([rec.a, rec.b])
            items.append(SweepItem(T0, rec))
        except (ShootingError, ConvergenceError, CollisionError, StepSizeError, ValueError) as exc:
            items.append(SweepItem(T0, None, str(exc)))
    return items
