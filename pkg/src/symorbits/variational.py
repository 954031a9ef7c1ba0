"""Kepler action on periodic loops and its second variation.

Loops are ``2*pi``-periodic planar paths sampled on a uniform grid.  In the
rotating frame with ``nu/omega = 1/p`` the action is

    A(x) = int_0^{2 pi} 1/2 |(x'/p + J x)|^2 + phi_alpha(|x|) dtau.

Writing ``x = rho (cos th, sin th) + eta`` with ``eta`` of zero mean, the
circle ``rho = 1, eta = 0`` is critical and the Hessian splits into the
radial direction (second derivative ``alpha + 1``) and one 2x2 Hermitian
block per Fourier mode of ``eta``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import GRAVITY, J, PotentialLaw

DEFAULT_SAMPLES = 256
DEGENERACY_TOL = 1e-12


class LoopThroughOriginError(ValueError):
    pass


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class LoopSamples:
    """Uniform samples ``x(tau_k)``, ``tau_k = 2 pi k / M``."""

    values: np.ndarray

    def __post_init__(self):
        x = np.array(self.values, dtype=float)
        if x.ndim != 2 or x.shape[1] != 2:
            raise ValueError("loop samples must have shape (M, 2)")
        if x.shape[0] < 64 or x.shape[0] % 2:
            raise GridError(f"need an even number of samples >= 64, got {x.shape[0]}")
        if not np.all(np.isfinite(x)):
            raise ValueError("loop samples must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "values", x)

    @classmethod
    def from_function(cls, f, M: int = DEFAULT_SAMPLES) -> "LoopSamples":
        tau = 2 * np.pi * np.arange(M) / M
        return cls(np.array([f(t) for t in tau], dtype=float).reshape(M, 2))

    @classmethod
    def from_modes(cls, modes: dict, M: int = DEFAULT_SAMPLES) -> "LoopSamples":
        """Real loop ``sum_l c_l e^{i l tau}`` with ``c_{-l} = conj(c_l)`` added.

        ``modes`` maps ``l >= 0`` to a complex 2-vector.
        """
        tau = 2 * np.pi * np.arange(M) / M
        x = np.zeros((M, 2))
        for l, c in modes.items():
            c = np.asarray(c, dtype=complex)
            term = np.exp(1j * l * tau)[:, None] * c[None, :]
            x += term.real if l == 0 else 2 * term.real
        return cls(x)

    @property
    def M(self) -> int:
        return self.values.shape[0]

    @property
    def tau(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.M) / self.M

    @property
    def mean(self) -> np.ndarray:
        return self.values.mean(axis=0)

    @property
    def eta(self) -> np.ndarray:
        return self.values - self.mean

    @property
    def radius(self) -> float:
        return float(np.hypot(*self.mean))

    @property
    def angle(self) -> float:
        return float(np.arctan2(self.mean[1], self.mean[0]))

    def coefficients(self) -> np.ndarray:
        """Complex Fourier coefficients ``x_l`` in numpy's frequency order."""
        return np.fft.fft(self.values, axis=0) / self.M

    def modes(self) -> np.ndarray:
        return np.fft.fftfreq(self.M, 1.0 / self.M).astype(int)

    def derivative(self) -> np.ndarray:
        """Spectral ``dx/dtau``; the Nyquist mode is dropped."""
        l = self.modes().astype(float)
        l[self.M // 2] = 0.0
        return np.fft.ifft(1j * l[:, None] * np.fft.fft(self.values, axis=0), axis=0).real

    def min_norm(self) -> float:
        return float(np.linalg.norm(self.values, axis=1).min())

    def rotated(self, angle: float) -> "LoopSamples":
        c, s = np.cos(angle), np.sin(angle)
        return LoopSamples(self.values @ np.array([[c, s], [-s, c]]).T)

    def __add__(self, other: "LoopSamples") -> "LoopSamples":
        return LoopSamples(self.values + other.values)

    def scaled(self, s: float) -> "LoopSamples":
        return LoopSamples(s * self.values)


def _check_p(p):
    if int(p) != p or p < 1:
        raise ValueError(f"p must be a positive integer, got {p}")


def kepler_action(loop: LoopSamples, p: int, law: PotentialLaw = GRAVITY) -> float:
    _check_p(p)
    x = loop.values
    if loop.min_norm() <= 0:
        raise LoopThroughOriginError("loop passes through the origin")
    v = loop.derivative() / p + x @ J.T
    integrand = 0.5 * np.einsum("ij,ij->i", v, v) + law.phi(np.linalg.norm(x, axis=1))
    return float(2 * np.pi * integrand.mean())


def circle_action(law: PotentialLaw = GRAVITY) -> float:
    """Action of the constant unit loop: ``2 pi (1/2 + phi(1))``."""
    return 2 * np.pi * (0.5 + law.phi(1.0))


def unit(theta: float) -> np.ndarray:
    return np.array([np.cos(theta), np.sin(theta)])


def decomposed_loop(theta: float, rho: float, eta: LoopSamples) -> LoopSamples:
    return LoopSamples(rho * unit(theta) + eta.values)


def _zero_mean(eta: LoopSamples, tol: float = 1e-12) -> None:
    if np.max(np.abs(eta.mean)) > tol * max(1.0, np.abs(eta.values).max()):
        raise ValueError("eta must have zero mean")


def quadratic_form(theta: float, r: float, eta: LoopSamples, p: int,
                   law: PotentialLaw = GRAVITY) -> float:
    """Second-order term of the action about the unit circle at angle ``theta``.

    ``1/2 int (alpha+1) r^2 + |(eta'/p + J eta)|^2 - |eta|^2 + (alpha+1)(e . eta)^2``
    with ``e = (cos theta, sin theta)``; there are no ``r``-``eta`` cross terms.
    """
    _check_p(p)
    _zero_mean(eta)
    a1 = law.alpha + 1
    h = eta.values
    Lh = eta.derivative() / p + h @ J.T
    e = unit(theta)
    integrand = (a1 * r * r + np.einsum("ij,ij->i", Lh, Lh) - np.einsum("ij,ij->i", h, h)
                 + a1 * (h @ e) ** 2)
    return float(np.pi * integrand.mean())


def expansion_residual(theta: float, r: float, eta: LoopSamples, p: int,
                       law: PotentialLaw = GRAVITY) -> float:
    """``|A(theta, 1 + r, eta) - A(theta, 1, 0) - Q(r, eta)|``."""
    _zero_mean(eta)
    full = kepler_action(decomposed_loop(theta, 1.0 + r, eta), p, law)
    return abs(full - circle_action(law) - quadratic_form(theta, r, eta, p, law))


# --- Fourier blocks -----------------------------------------------------------

@dataclass(frozen=True)
class HessianBlock:
    l: int
    theta: float
    alpha: float
    p: int
    matrix: np.ndarray

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def hessian_block(l: int, theta: float, p: int, law: PotentialLaw = GRAVITY) -> HessianBlock:
    """Normalised Hessian of the action on Fourier mode ``l`` of ``eta``."""
    if l == 0:
        raise ValueError("mode 0 is the radial sector (second derivative alpha + 1)")
    _check_p(p)
    a1 = law.alpha + 1
    s = l / p
    c, sn = np.cos(theta), np.sin(theta)
    A = np.array([
        [s * s + a1 * c * c, -2j * s + a1 * sn * c],
        [2j * s + a1 * sn * c, s * s + a1 * sn * sn],
    ]) / (l * l + 1)
    return HessianBlock(int(l), float(theta), law.alpha, int(p), A)


def hessian_eigenvalues(l: int, p: int, law: PotentialLaw = GRAVITY) -> tuple[float, float]:
    """Closed-form ``(lambda_minus, lambda_plus)`` for mode ``l``."""
    if l == 0:
        raise ValueError("mode 0 has no eta block")
    _check_p(p)
    a1 = law.alpha + 1
    s2 = (l / p) ** 2
    root = 0.5 * np.sqrt(a1 * a1 + 16 * s2)
    scale = 1.0 / (l * l + 1)
    return scale * (a1 / 2 + s2 - root), scale * (a1 / 2 + s2 + root)


def radial_second_derivative(law: PotentialLaw = GRAVITY) -> float:
    return law.alpha + 1


def fourier_quadratic_form(theta: float, eta: LoopSamples, p: int,
                           law: PotentialLaw = GRAVITY) -> float:
    """The ``eta`` part of :func:`quadratic_form` assembled from the blocks.

    ``pi * sum_l (l^2 + 1) conj(x_l) . A_l x_l`` over nonzero modes.
    """
    _zero_mean(eta)
    coef = eta.coefficients()
    total = 0.0
    for l, c in zip(eta.modes(), coef):
        if l == 0 or abs(l) == eta.M // 2:
            continue
        A = hessian_block(int(l), theta, p, law).matrix
        total += (l * l + 1) * float(np.real(np.conj(c) @ A @ c))
    return float(np.pi * total)


def nondegeneracy_margin(p: int, law: PotentialLaw = GRAVITY, l_max: int = 50,
                         tol: float = DEGENERACY_TOL):
    """``(min |lambda|, degenerate modes)`` over ``1 <= |l| <= l_max``."""
    _check_p(p)
    if l_max < p:
        raise ValueError("l_max must be at least p")
    margin, degenerate = np.inf, []
    for l in range(-l_max, l_max + 1):
        if l == 0:
            continue
        lo, hi = hessian_eigenvalues(l, p, law)
        smallest = min(abs(lo), abs(hi))
        margin = min(margin, smallest)
        if smallest <= tol:
            degenerate.append(l)
    return float(margin), degenerate


def symmetric_projector(loop: LoopSamples, m: int, p: int) -> LoopSamples:
    """Keep the Fourier modes that are multiples of ``m * p``.

    These are exactly the loops invariant under the time shift
    ``x(tau) -> x(tau - 2 pi/(m p))``.
    """
    _check_p(p)
    if m < 1:
        raise ValueError("m must be positive")
    period = m * p
    if loop.M % period:
        raise GridError(f"{loop.M} samples are not divisible by m*p = {period}")
    coef = np.fft.fft(loop.values, axis=0)
    keep = loop.modes() % period == 0
    coef[~keep] = 0.0
    return LoopSamples(np.fft.ifft(coef, axis=0).real)


def shift_residual(loop: LoopSamples, m: int, p: int) -> float:
    """``max |x(tau - 2 pi/(m p)) - x(tau)|`` on the grid."""
    step = loop.M // (m * p)
    return float(np.max(np.abs(np.roll(loop.values, step, axis=0) - loop.values)))


def restricted_invertibility(p: int, m: int, l_max: int = 50,
                             law: PotentialLaw = GRAVITY) -> float:
    """Smallest ``|lambda|`` over nonzero modes ``l`` divisible by ``m p``, ``|l| <= l_max``."""
    _check_p(p)
    if m < 1:
        raise ValueError("m must be positive")
    step = m * p
    modes = [l for l in range(step, l_max + 1, step)]
    if not modes:
        raise ValueError(f"no retained modes up to l_max={l_max} (need l_max >= {step})")
    margin = np.inf
    for l in modes:
        for sign in (1, -1):
            lo, hi = hessian_eigenvalues(sign * l, p, law)
            margin = min(margin, abs(lo), abs(hi))
    return float(margin)


def spectrum_report(alpha: float, p: int, m: int, l_max: int) -> dict:
    """Per-mode eigenvalues plus full and symmetric-subspace margins."""
    if l_max < 1:
        raise ValueError("l_max must be >= 1")
    law = PotentialLaw(alpha)
    rows = []
    for l in range(1, l_max + 1):
        lo, hi = hessian_eigenvalues(l, p, law)
        rows.append({"l": l, "lambda_minus": lo, "lambda_plus": hi,
                     "retained": l % (m * p) == 0})
    margin, degenerate = nondegeneracy_margin(p, law, max(l_max, p))
    try:
        restricted = restricted_invertibility(p, m, l_max, law)
    except ValueError:
        restricted = None
    return {
        "alpha": alpha,
        "p": p,
        "m": m,
        "l_max": l_max,
        "radial_second_derivative": radial_second_derivative(law),
        "margin": margin,
        "degenerate_modes": degenerate,
        "restricted_margin": restricted,
        "modes": rows,
    }
