import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symorbits.dynamics import J, PotentialLaw
from symorbits.variational import (
    GridError,
    LoopSamples,
    LoopThroughOriginError,
    circle_action,
    expansion_residual,
    fourier_quadratic_form,
    hessian_block,
    hessian_eigenvalues,
    kepler_action,
    nondegeneracy_margin,
    quadratic_form,
    radial_second_derivative,
    restricted_invertibility,
    shift_residual,
    spectrum_report,
    symmetric_projector,
)

LAWS = [PotentialLaw(1.0), PotentialLaw(2.0), PotentialLaw(3.0)]
X0 = np.array([1.0, 0.0])


def rotating_circle(tau):
    # e^{J tau} x0 with J = [[0, 1], [-1, 0]]
    return np.array([np.cos(tau), -np.sin(tau)])


def smooth_eta(rng, l_max=4, amp=1.0, M=256):
    modes = {l: amp * (rng.normal(size=2) + 1j * rng.normal(size=2)) / l ** 2 for l in range(1, l_max + 1)}
    return LoopSamples.from_modes(modes, M)


# --- action ---------------------------------------------------------------------

@pytest.mark.parametrize("p", [1, 2, 5])
def test_constant_loop_action(p):
    loop = LoopSamples.from_function(lambda t: X0)
    assert kepler_action(loop, p) == pytest.approx(3 * np.pi, rel=1e-14)
    assert circle_action() == pytest.approx(3 * np.pi, rel=1e-15)


def test_rotating_circle_action():
    loop = LoopSamples.from_function(rotating_circle)
    assert kepler_action(loop, 1) == pytest.approx(6 * np.pi, rel=1e-13)


def test_rotating_circle_is_e_to_the_J_tau():
    from scipy.linalg import expm
    for tau in (0.3, 1.7, 4.0):
        np.testing.assert_allclose(expm(J * tau) @ X0, rotating_circle(tau), atol=1e-14)


def test_action_quadrature_converges_spectrally():
    f = lambda t: np.array([2 + 0.3 * np.cos(t), 0.5 * np.sin(2 * t) + 0.1])
    values = [kepler_action(LoopSamples.from_function(f, M), 1) for M in (64, 128, 512)]
    assert abs(values[1] - values[2]) < 1e-12
    assert abs(values[0] - values[2]) < 1e-9


def test_action_rejects_loop_through_origin():
    loop = LoopSamples.from_function(lambda t: np.array([np.cos(t) - 1.0, np.sin(t)]), 64)
    with pytest.raises(LoopThroughOriginError):
        kepler_action(loop, 1)


@pytest.mark.parametrize("M", [10, 63, 65])
def test_grid_validation(M):
    with pytest.raises(GridError):
        LoopSamples(np.ones((M, 2)))


@given(st.floats(0, 2 * np.pi))
def test_action_rotation_invariant(angle):
    f = lambda t: np.array([1.5 + 0.2 * np.cos(t), 0.3 * np.sin(t)])
    loop = LoopSamples.from_function(f, 128)
    assert kepler_action(loop.rotated(angle), 2) == pytest.approx(kepler_action(loop, 2), rel=1e-12)


def test_spectral_derivative():
    loop = LoopSamples.from_function(lambda t: np.array([np.sin(3 * t), np.cos(t)]), 64)
    expected = np.column_stack([3 * np.cos(3 * loop.tau), -np.sin(loop.tau)])
    np.testing.assert_allclose(loop.derivative(), expected, atol=1e-12)


# --- quadratic form and the expansion --------------------------------------------

def test_zero_perturbation_has_zero_remainder():
    eta = LoopSamples(np.zeros((128, 2)))
    assert expansion_residual(0.4, 0.0, eta, 1) == 0.0
    assert quadratic_form(0.4, 0.0, eta, 1) == 0.0


@pytest.mark.parametrize("law", LAWS, ids=lambda l: f"alpha{l.alpha:g}")
@pytest.mark.parametrize("p", [1, 2])
def test_cubic_remainder(law, p):
    rng = np.random.default_rng(7)
    eta = smooth_eta(rng)
    eta = eta.scaled(1.0 / np.abs(eta.values).max())
    r, theta = 0.6, 1.1
    ratios = [expansion_residual(theta, s * r, eta.scaled(s), p, law) / s ** 3 for s in (1e-1, 1e-2, 1e-3)]
    assert max(ratios) < 50.0
    # genuinely third order: the ratios settle instead of shrinking or growing by decades
    assert ratios[2] == pytest.approx(ratios[1], rel=0.2)


def test_quadratic_form_rejects_eta_with_mean():
    eta = LoopSamples(np.ones((64, 2)))
    with pytest.raises(ValueError):
        quadratic_form(0.0, 0.0, eta, 1)


@pytest.mark.parametrize("law", LAWS, ids=lambda l: f"alpha{l.alpha:g}")
@pytest.mark.parametrize("p", [1, 3])
def test_fourier_form_matches_quadrature(law, p, rng):
    eta = smooth_eta(rng, l_max=6)
    theta = rng.uniform(0, 2 * np.pi)
    quad = quadratic_form(theta, 0.0, eta, p, law)
    assert fourier_quadratic_form(theta, eta, p, law) == pytest.approx(quad, rel=1e-12, abs=1e-12)


def test_radial_direction():
    for law in LAWS:
        assert radial_second_derivative(law) == law.alpha + 1
        eta = LoopSamples(np.zeros((64, 2)))
        assert quadratic_form(0.0, 0.1, eta, 1, law) == pytest.approx(np.pi * (law.alpha + 1) * 0.01)


# --- Hessian blocks --------------------------------------------------------------

def test_block_l1_example():
    A = hessian_block(1, 0.0, 1).matrix
    np.testing.assert_allclose(A, 0.5 * np.array([[4, -2j], [2j, 1]]), atol=1e-15)


@given(st.integers(-40, 40).filter(bool), st.floats(0, 2 * np.pi), st.integers(1, 5), st.sampled_from([1.0, 1.5, 2.0, 3.0]))
def test_block_hermitian_and_closed_form(l, theta, p, alpha):
    law = PotentialLaw(alpha)
    A = hessian_block(l, theta, p, law).matrix
    np.testing.assert_allclose(A, A.conj().T, atol=0)
    np.testing.assert_allclose(np.linalg.eigvalsh(A), hessian_eigenvalues(l, p, law), atol=1e-12)


@pytest.mark.parametrize("alpha", [1.0, 2.0, 3.0])
@pytest.mark.parametrize("p", [1, 2, 3])
def test_closed_form_over_grid(alpha, p):
    law = PotentialLaw(alpha)
    for l in range(-50, 51):
        if l == 0:
            continue
        for theta in np.linspace(0, 2 * np.pi, 7):
            np.testing.assert_allclose(hessian_block(l, theta, p, law).eigenvalues(),
                                       hessian_eigenvalues(l, p, law), atol=1e-12)


def test_block_rejects_mode_zero():
    with pytest.raises(ValueError):
        hessian_block(0, 0.0, 1)
    with pytest.raises(ValueError):
        hessian_eigenvalues(0, 1)


def test_eigenvalue_examples():
    assert hessian_eigenvalues(1, 1) == pytest.approx((0.0, 2.5), abs=1e-15)
    lo, hi = hessian_eigenvalues(1, 1, PotentialLaw(1.0))
    assert (lo, hi) == pytest.approx((0.5 * (2 - np.sqrt(5)), 0.5 * (2 + np.sqrt(5))), abs=1e-15)


def test_large_mode_limit():
    lo, hi = hessian_eigenvalues(10_000, 2)
    assert abs(lo - 0.25) < 1e-3 and abs(hi - 0.25) < 1e-3


# --- nondegeneracy ---------------------------------------------------------------

def test_gravity_degenerate_modes():
    assert nondegeneracy_margin(3)[1] == [-3, 3]
    for p in (1, 2, 4):
        assert nondegeneracy_margin(p)[1] == [-p, p]


@pytest.mark.parametrize("alpha", [1.0, 1.5, 3.0])
@pytest.mark.parametrize("p", [1, 2, 3])
def test_other_laws_nondegenerate(alpha, p):
    margin, degenerate = nondegeneracy_margin(p, PotentialLaw(alpha))
    assert degenerate == [] and margin > 1e-3


def test_margin_alpha1_p2_frozen():
    # the smallest normalised eigenvalue sits at |l| = 3; (l^2 + 1) * lambda there is 0.0877
    margin, degenerate = nondegeneracy_margin(2, PotentialLaw(1.0))
    assert degenerate == []
    assert margin == pytest.approx(0.008772233983162047, rel=1e-12)
    lo, _ = hessian_eigenvalues(3, 2, PotentialLaw(1.0))
    assert 10 * lo == pytest.approx(0.08772233983162047, rel=1e-12)


def test_margin_needs_l_max():
    with pytest.raises(ValueError):
        nondegeneracy_margin(3, l_max=2)


# --- symmetric subspace ----------------------------------------------------------

def test_projector_examples():
    const = LoopSamples(np.tile([1.5, -0.5], (64, 1)))
    np.testing.assert_allclose(symmetric_projector(const, 2, 1).values, const.values, atol=1e-15)
    mode1 = LoopSamples.from_modes({1: [1.0, 1j]}, 64)
    np.testing.assert_allclose(symmetric_projector(mode1, 2, 1).values, 0.0, atol=1e-15)


@pytest.mark.parametrize("m,p", [(1, 1), (2, 1), (2, 2), (4, 1), (2, 4)])
def test_projector_idempotent_and_shift_invariant(m, p, rng):
    loop = LoopSamples(rng.normal(size=(128, 2)))
    proj = symmetric_projector(loop, m, p)
    np.testing.assert_allclose(symmetric_projector(proj, m, p).values, proj.values, atol=1e-13)
    assert shift_residual(proj, m, p) < 1e-13


def test_projector_grid_error():
    with pytest.raises(GridError):
        symmetric_projector(LoopSamples(np.ones((66, 2))), 4, 1)


def brute_restricted(p, m, alpha=2.0, l_max=50):
    a1, best = alpha + 1, np.inf
    for l in range(-l_max, l_max + 1):
        if l and l % (m * p) == 0:
            s = l / p
            A = np.array([[s * s + a1, -2j * s], [2j * s, s * s]]) / (l * l + 1)
            best = min(best, np.abs(np.linalg.eigvalsh(A)).min())
    return best


@pytest.mark.parametrize("p,m", [(1, 2), (2, 2), (1, 3), (3, 2)])
def test_restricted_matches_brute_force(p, m):
    assert restricted_invertibility(p, m) == pytest.approx(brute_restricted(p, m), rel=1e-12)


def test_restricted_examples():
    assert restricted_invertibility(1, 2) == pytest.approx(0.24559962546824687, rel=1e-12)
    assert restricted_invertibility(2, 2) == pytest.approx(0.07223518396124909, rel=1e-12)
    assert restricted_invertibility(1, 1) == pytest.approx(0.0, abs=1e-15)


def test_restricted_needs_retained_mode():
    with pytest.raises(ValueError):
        restricted_invertibility(3, 2, l_max=5)


def test_spectrum_report():
    rep = spectrum_report(2.0, 1, 2, 8)
    assert rep["degenerate_modes"] == [-1, 1]
    assert [row["l"] for row in rep["modes"] if row["retained"]] == [2, 4, 6, 8]
    assert rep["restricted_margin"] > 0
    assert rep["radial_second_derivative"] == 3.0
    with pytest.raises(ValueError):
        spectrum_report(2.0, 1, 2, 0)
