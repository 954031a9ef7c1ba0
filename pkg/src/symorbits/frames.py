"""Comet and moon coordinates.

Comet: ``q(t) = eps**-1 exp(J w tau/nu) x(tau)``, ``t = tau/nu``, with
``w**2 = eps**(alpha+1)``.  Moon: ``q(t) = q_1(t) + eps exp(J w tau/nu) x(tau)``
with ``w**2 = eps**-(alpha+1)``.  In both frames the circular Kepler orbit is
the equilibrium ``x = x0 = (1, 0)`` of ``(nu/w d/dtau + J)**2 x = -x/|x|**(alpha+1)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .configs import CentralConfiguration
from .dynamics import (
    DEFAULT_COLLISION_RADIUS,
    GRAVITY,
    J,
    CollisionError,
    PotentialLaw,
    SystemState,
    acceleration_array,
    as_masses,
    rotation,
)
from .integrate import IntegratorConfig, Trajectory, propagate, propagate_bodies, propagate_vector

X0 = np.array([1.0, 0.0])


class DegenerateFitError(ValueError):
    pass


@dataclass(frozen=True)
class CometFrame:
    p: int
    q: int
    alpha: float = 2.0

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ValueError("p and q must be positive integers")
        PotentialLaw(self.alpha)

    @property
    def omega(self) -> float:
        return self.p / self.q

    @property
    def nu(self) -> float:
        return 1.0 / self.q

    @property
    def eps(self) -> float:
        return (self.p / self.q) ** (2.0 / (self.alpha + 1.0))

    @property
    def speed_ratio(self) -> Fraction:
        """``nu/omega`` as an exact rational."""
        return Fraction(1, self.p)


@dataclass(frozen=True)
class MoonFrame:
    r: int
    q: int
    alpha: float = 2.0

    def __post_init__(self):
        if self.r < 1 or self.q < 1 or self.r <= self.q:
            raise ValueError("need integers r > q >= 1")
        PotentialLaw(self.alpha)

    @property
    def omega(self) -> float:
        return self.r / self.q

    @property
    def nu(self) -> float:
        return self.r / self.q - 1.0

    @property
    def eps(self) -> float:
        return (self.r / self.q) ** (-2.0 / (self.alpha + 1.0))

    @property
    def winding_ratio(self) -> Fraction:
        """``(omega - 1)/nu``, identically 1."""
        return (Fraction(self.r, self.q) - 1) / (Fraction(self.r, self.q) - 1)


def _frame_angle(tau, frame) -> float:
    return frame.omega * tau / frame.nu


# --- comet ----------------------------------------------------------------------

def comet_to_inertial(x, tau: float, frame: CometFrame):
    t = tau / frame.nu
    return rotation(_frame_angle(tau, frame)) @ np.asarray(x, float) / frame.eps, t


def inertial_to_comet(q, t: float, frame: CometFrame):
    tau = t * frame.nu
    return frame.eps * rotation(-_frame_angle(tau, frame)) @ np.asarray(q, float), tau


def comet_state_to_inertial(x, xp, tau: float, frame: CometFrame):
    """Rotating position and ``dx/dtau`` to inertial position and velocity."""
    R = rotation(_frame_angle(tau, frame))
    x, xp = np.asarray(x, float), np.asarray(xp, float)
    q = R @ x / frame.eps
    v = R @ (frame.omega * (J @ x) + frame.nu * xp) / frame.eps
    return q, v, tau / frame.nu


def comet_primaries(positions, tau: float, frame: CometFrame) -> np.ndarray:
    """Rotated primaries ``x_j(tau) = exp(-J w tau/nu) q_j(tau/nu)``."""
    return np.asarray(positions, float) @ rotation(-_frame_angle(tau, frame)).T


def _kernel_sum(y, masses, alpha):
    """``sum_j m_j y_j/|y_j|**(alpha+1)`` for rows ``y_j``."""
    r2 = np.einsum("ij,ij->i", y, y)
    return (masses * r2 ** (-(alpha + 1) / 2)) @ y


def comet_rotating_rhs(x_state, tau: float, frame: CometFrame, primaries, masses,
                       guard: float = DEFAULT_COLLISION_RADIUS) -> np.ndarray:
    """``d/dtau (x, x')`` for the comet equation in rotating coordinates."""
    x, xp = np.asarray(x_state[:2], float), np.asarray(x_state[2:4], float)
    m = as_masses(masses)
    y = x[None, :] - frame.eps * np.asarray(primaries, float)
    dist = np.sqrt(np.einsum("ij,ij->i", y, y))
    active = m > 0
    if np.any(dist[active] < guard):
        j = int(np.argmin(np.where(active, dist, np.inf)))
        raise CollisionError(tau, (j, len(m)), float(dist[j]))
    force = -_kernel_sum(y, m, frame.alpha)
    k = frame.nu / frame.omega
    xpp = (force + x - 2 * k * (J @ xp)) / (k * k)
    return np.concatenate([xp, xpp])


def comet_h_gradient(x, eps: float, primaries, masses, law: PotentialLaw) -> np.ndarray:
    """Analytic ``grad_x h`` of the comet perturbation."""
    x = np.asarray(x, float)
    m = as_masses(masses)
    y = x[None, :] - eps * np.asarray(primaries, float)
    a = law.alpha
    return -_kernel_sum(y, m, a) + m.sum() * x * (x @ x) ** (-(a + 1) / 2)


# --- moon -----------------------------------------------------------------------

def hosted(cc: CentralConfiguration, host: int) -> CentralConfiguration:
    """Same configuration relabelled so that body ``host`` comes first."""
    order = [host] + [j for j in range(len(cc.masses)) if j != host]
    return CentralConfiguration(cc.points[order], cc.masses[order], cc.alpha, cc.residual, cc.iterations)


def moon_primaries(cc: CentralConfiguration, tau: float, frame: MoonFrame) -> np.ndarray:
    """``x_j(tau) = exp(-J (w-1) tau/nu) a_j`` for a relative equilibrium."""
    ang = -(frame.omega - 1.0) * tau / frame.nu
    return cc.points @ rotation(ang).T


def moon_to_inertial(x, tau: float, frame: MoonFrame, q1):
    return np.asarray(q1, float) + frame.eps * rotation(_frame_angle(tau, frame)) @ np.asarray(x, float), tau / frame.nu


def moon_state_to_inertial(x, xp, tau: float, frame: MoonFrame, q1, v1):
    R = rotation(_frame_angle(tau, frame))
    x, xp = np.asarray(x, float), np.asarray(xp, float)
    q = np.asarray(q1, float) + frame.eps * R @ x
    v = np.asarray(v1, float) + frame.eps * R @ (frame.omega * (J @ x) + frame.nu * xp)
    return q, v, tau / frame.nu


def _moon_perturbation(x, eps, offsets, masses, alpha):
    """``sum_j m_j [(d_j + eps x)/|.|**(alpha+1) - d_j/|d_j|**(alpha+1)]``."""
    y = offsets + eps * x[None, :]
    return _kernel_sum(y, masses, alpha) - _kernel_sum(offsets, masses, alpha)


def moon_rotating_rhs(x_state, tau: float, frame: MoonFrame, central_config: CentralConfiguration,
                      guard: float = DEFAULT_COLLISION_RADIUS) -> np.ndarray:
    """``d/dtau (x, x')`` for the moon equation around body 1 (unit mass)."""
    cc = central_config
    if cc.masses[0] != 1:
        raise ValueError("moon frame needs m_1 = 1")
    x, xp = np.asarray(x_state[:2], float), np.asarray(x_state[2:4], float)
    xs = moon_primaries(cc, tau, frame)
    offsets = xs[0][None, :] - xs[1:]
    eps, a = frame.eps, frame.alpha
    rx = np.hypot(*x)
    near = np.sqrt(np.einsum("ij,ij->i", offsets + eps * x, offsets + eps * x))
    if eps * rx < guard or np.any(near < guard):
        raise CollisionError(tau, (0, len(cc.masses)), float(min(eps * rx, near.min())))
    force = -x * rx ** (-(a + 1)) - eps**a * _moon_perturbation(x, eps, offsets, cc.masses[1:], a)
    k = frame.nu / frame.omega
    xpp = (force + x - 2 * k * (J @ xp)) / (k * k)
    return np.concatenate([xp, xpp])


def moon_h_gradient(x, eps: float, offsets, masses, law: PotentialLaw) -> np.ndarray:
    """Analytic ``grad_x h`` of the moon perturbation (``offsets = x_1 - x_j``, j >= 2)."""
    x = np.asarray(x, float)
    return -eps**law.alpha * _moon_perturbation(x, eps, np.asarray(offsets, float),
                                                np.asarray(masses, float), law.alpha)


# --- order of the perturbation ------------------------------------------------

def fit_slope(eps_grid, values) -> float:
    eps = np.asarray(eps_grid, float)
    if eps.size < 3 or np.log10(eps.max() / eps.min()) < 1.5:
        raise DegenerateFitError("eps grid must hold >= 3 points spanning >= 1.5 decades")
    return float(np.polyfit(np.log(eps), np.log(values), 1)[0])


def _super_eight_samples(n_tau):
    taus = 2 * np.pi * np.arange(n_tau) / n_tau
    positions = _super_eight_positions()
    return taus, np.array([positions(t) for t in taus])


def perturbation_order(kind: str, law: PotentialLaw, eps_grid=None, n_tau: int = 24,
                       n_theta: int = 24, n_bodies: int = 4, host: int = 1) -> float:
    """Fitted exponent of ``max |grad_x h|`` against eps on the unit circle.

    Comet: super-eight primaries with ``p = q = 1``.  Moon: Maxwell
    configuration of ``n_bodies`` bodies, satellite around body ``host``
    (a ring vertex by default; around the centre the leading tidal term of
    a regular ring cancels when ``alpha = 1``).
    """
    from .configs import maxwell_configuration
    eps_grid = np.geomspace(1e-4, 1e-2, 9) if eps_grid is None else np.asarray(eps_grid, float)
    thetas = 2 * np.pi * np.arange(n_theta) / n_theta
    circle = np.array([rotation(th) @ X0 for th in thetas])
    if kind == "comet":
        frame = CometFrame(1, 1, law.alpha)
        taus, positions = _super_eight_samples(n_tau)
        rotated = [comet_primaries(positions[i], taus[i], frame) for i in range(n_tau)]
        masses = np.ones(4)

        def grad(x, eps, xs):
            return comet_h_gradient(x, eps, xs, masses, law)
    elif kind == "moon":
        cc = hosted(maxwell_configuration(n_bodies, law), host)
        frame = MoonFrame(2, 1, law.alpha)
        taus = 2 * np.pi * np.arange(n_tau) / n_tau
        rotated = []
        for tau in taus:
            xs = moon_primaries(cc, tau, frame)
            rotated.append(xs[0][None, :] - xs[1:])
        masses = cc.masses[1:]

        def grad(x, eps, offs):
            return moon_h_gradient(x, eps, offs, masses, law)
    else:
        raise ValueError("kind must be 'comet' or 'moon'")
    values = []
    for eps in eps_grid:
        worst = 0.0
        for xs in rotated:
            for x in circle:
                worst = max(worst, float(np.max(np.abs(grad(x, eps, xs)))))
        values.append(worst)
    return fit_slope(eps_grid, values)


# --- dual-frame integration -------------------------------------------------------

def _super_eight_positions():
    from .configs import ephemeris
    return ephemeris("isosceles").positions


def direct_satellite_rhs(primaries, masses, law: PotentialLaw,
                         guard: float = DEFAULT_COLLISION_RADIUS):
    """Inertial satellite field ``(q, v)`` for prescribed primaries ``t -> (n, 2)``."""
    m = as_masses(masses)

    def rhs(t, z):
        y = z[None, :2] - primaries(t)
        dist = np.sqrt(np.einsum("ij,ij->i", y, y))
        if np.any(dist[m > 0] < guard):
            j = int(np.argmin(dist))
            raise CollisionError(t, (j, len(m)), float(dist[j]))
        return np.concatenate([z[2:], -_kernel_sum(y, m, law.alpha)])

    return rhs


def integrate_comet_frame(x0, xp0, frame: CometFrame, tau_end: float, primaries=None, masses=None,
                          tau0: float = 0.0, config: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """Rotating-frame comet integration; ``primaries`` maps inertial time to positions.

    Defaults to the super-eight.
    """
    primaries = _super_eight_positions() if primaries is None else primaries
    m = np.ones(4) if masses is None else as_masses(masses)

    def rhs(tau, s):
        xs = comet_primaries(primaries(tau / frame.nu), tau, frame)
        return comet_rotating_rhs(s, tau, frame, xs, m, config.collision_radius)

    s0 = np.concatenate([np.asarray(x0, float), np.asarray(xp0, float)])
    return propagate_vector(rhs, tau0, s0, tau0 + tau_end, config, 1)


def comet_equilibrium(total_mass: float, alpha: float) -> np.ndarray:
    """Co-rotating rest point of the unperturbed comet equation for total mass ``M``."""
    return np.array([total_mass ** (1.0 / (alpha + 1.0)), 0.0])


def comet_conjugacy_error(frame: CometFrame, x0=None, xp0=(0.0, 0.0), primaries=None, masses=None,
                          tau0: float = 0.0, config: IntegratorConfig = IntegratorConfig(),
                          n_check: int = 33) -> float:
    """Max inertial gap between rotating-frame and direct integration over one rotating period.

    ``x0`` defaults to the co-rotating rest point for the primaries' total mass.
    """
    primaries = _super_eight_positions() if primaries is None else primaries
    m = np.ones(4) if masses is None else as_masses(masses)
    x0 = comet_equilibrium(m.sum(), frame.alpha) if x0 is None else x0
    rot = integrate_comet_frame(x0, xp0, frame, 2 * np.pi, primaries, m, tau0, config)
    q, v, t = comet_state_to_inertial(x0, xp0, tau0, frame)
    rhs = direct_satellite_rhs(primaries, m, PotentialLaw(frame.alpha), config.collision_radius)
    direct = propagate_vector(rhs, t, np.concatenate([q, v]), t + 2 * np.pi / frame.nu, config, 1)
    worst = 0.0
    for tau in np.linspace(tau0, tau0 + 2 * np.pi, n_check):
        s = rot.vector_at(tau)
        qr, vr, t_r = comet_state_to_inertial(s[:2], s[2:4], tau, frame)
        worst = max(worst, float(np.max(np.abs(np.concatenate([qr, vr]) - direct.vector_at(t_r)))))
    return worst


def integrate_moon_frame(x0, xp0, frame: MoonFrame, cc: CentralConfiguration, tau_end: float,
                         config: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    def rhs(tau, s):
        return moon_rotating_rhs(s, tau, frame, cc, config.collision_radius)

    start = SystemState(0.0, [x0], [xp0])
    return propagate(rhs, start, tau_end, config)


def moon_conjugacy_error(frame: MoonFrame, cc: CentralConfiguration, x0=X0, xp0=(0.0, 0.0),
                         config: IntegratorConfig = IntegratorConfig(), n_check: int = 33) -> float:
    rot = integrate_moon_frame(np.asarray(x0, float), np.asarray(xp0, float), frame, cc, 2 * np.pi, config)
    prim0 = cc.relative_equilibrium(0.0)
    q, v, _ = moon_state_to_inertial(x0, xp0, 0.0, frame, prim0.positions[0], prim0.velocities[0])
    full0 = SystemState(0.0, np.vstack([prim0.positions, q]), np.vstack([prim0.velocities, v]))
    law = PotentialLaw(frame.alpha)
    direct = propagate_bodies(full0, np.append(cc.masses, 0.0), law, 2 * np.pi / frame.nu, config)
    n = len(cc.masses)
    worst = 0.0
    for tau in np.linspace(0.0, 2 * np.pi, n_check):
        s = rot.vector_at(tau)
        u = direct.vector_at(tau / frame.nu)
        q1, v1 = u[:2], u[2 * (n + 1):2 * (n + 1) + 2]
        qr, vr, _ = moon_state_to_inertial(s[:2], s[2:4], tau, frame, q1, v1)
        worst = max(worst, float(np.max(np.abs(np.concatenate([qr - u[2 * n:2 * n + 2],
                                                               vr - u[2 * (n + 1) + 2 * n:2 * (n + 1) + 2 * n + 2]])))))
    return worst


# --- analytic seeds ---------------------------------------------------------------

def circular_radius(period: float, mass: float, law: PotentialLaw = GRAVITY) -> float:
    """Radius of the circular orbit of given period about ``mass``: ``a**(alpha+1) = M (P/2pi)**2``."""
    return (mass * (period / (2 * np.pi)) ** 2) ** (1.0 / (law.alpha + 1.0))


def circular_speed(radius: float, mass: float, law: PotentialLaw = GRAVITY) -> float:
    return float(np.sqrt(mass * radius ** (1.0 - law.alpha)))


def comet_seed(T0: float, total_mass: float, law: PotentialLaw = GRAVITY) -> tuple[float, float]:
    """Circular Kepler orbit about the total mass with period ``4 T0``."""
    if T0 <= 0:
        raise ValueError("T0 must be positive")
    a = circular_radius(4 * T0, total_mass, law)
    return a, circular_speed(a, total_mass, law)


def moon_seed(T0: float, mass: float = 1.0, windings: float | None = None,
              separation: float | None = None, law: PotentialLaw = GRAVITY) -> tuple[float, float]:
    """Separation and relative speed of a circular orbit about one primary.

    Give either the number of windings completed in ``T0`` or the separation.
    """
    if (windings is None) == (separation is None):
        raise ValueError("give exactly one of windings or separation")
    if separation is None:
        if T0 <= 0 or windings <= 0:
            raise ValueError("T0 and windings must be positive")
        separation = circular_radius(T0 / windings, mass, law)
    return separation, circular_speed(separation, mass, law)
