import numpy as np
import pytest
from scipy.optimize import brentq

from symorbits.configs import (
    K,
    SUPER_EIGHT_SIGMA,
    CentralConfiguration,
    ConvergenceError,
    check_polygon_symmetry,
    choreography_trajectory,
    central_configuration_residual,
    ephemeris,
    maxwell_configuration,
    polygon_symmetry_residual,
    primaries_at,
    relative_equilibrium_closure,
    solve_central_configuration,
    super_eight_isosceles,
    super_eight_orthogonal,
    verify_choreography,
)
from symorbits.dynamics import GRAVITY, PotentialLaw, conserved_quantities, rotation


def test_isosceles_published_values():
    s = super_eight_isosceles().state
    np.testing.assert_array_equal(s.positions[0], [0.939977120285667, -0.327721385645527])
    np.testing.assert_array_equal(s.velocities[0], [1.122200245052303, -0.117392625737923])
    np.testing.assert_array_equal(s.positions[1], [0.939977120285667, 0.327721385645527])
    q, v = s.positions, s.velocities
    assert np.array_equal(q[1], K @ q[0]) and np.array_equal(q[2], -q[0]) and np.array_equal(q[3], -q[1])
    assert np.array_equal(v[1], -K @ v[0]) and np.array_equal(v[2], -v[0]) and np.array_equal(v[3], -v[1])


def test_orthogonal_published_values():
    s = super_eight_orthogonal().state
    np.testing.assert_array_equal(s.positions[0], [1.382856843618412, 0.0])
    np.testing.assert_array_equal(s.velocities[0], [0.0, 0.584872630814899])
    np.testing.assert_array_equal(s.positions[1], [0.0, 0.157029922281204])
    np.testing.assert_array_equal(s.velocities[1], [1.871935245878693, 0.0])
    assert np.all(np.einsum("ij,ij->i", s.positions, s.velocities) == 0.0)
    assert s.t == pytest.approx(np.pi / 4)


@pytest.mark.parametrize("ic", [super_eight_isosceles(), super_eight_orthogonal()], ids=lambda c: c.label)
def test_published_data_centred(ic):
    inv = conserved_quantities(ic.state, ic.masses, GRAVITY)
    assert np.max(np.abs(inv.center_of_mass)) <= 1e-13
    assert np.max(np.abs(inv.linear_momentum)) <= 1e-13
    assert ic.m == 2 and ic.sigma == SUPER_EIGHT_SIGMA


@pytest.fixture(scope="module")
def iso_report():
    return verify_choreography(super_eight_isosceles())


def test_period_closure(iso_report):
    assert iso_report.period_residual < 1e-8


def test_antipodal_symmetry_along_orbit(iso_report):
    assert iso_report.symmetry_residual < 1e-8


def test_quarter_period_reaches_orthogonal_data_after_relabelling(iso_report):
    # bodies 2 and 4 trade labels between the two published configurations
    assert iso_report.quarter_match_relabeled < 1e-9
    assert iso_report.quarter_relabeling == (0, 3, 2, 1)


def test_polygon_symmetry_instantaneous():
    traj = choreography_trajectory("isosceles")
    assert check_polygon_symmetry(traj, 2, SUPER_EIGHT_SIGMA, 1, 0) < 1e-8
    assert check_polygon_symmetry(traj, 1, (0, 1, 2, 3), 1, 0) == 0.0
    assert check_polygon_symmetry(traj, 2, (1, 0, 3, 2), 1, 0) > 0.1


@pytest.mark.parametrize("sigma,p,q", [((3, 0, 1, 2), 2, 1), ((1, 2, 3, 0), 2, 3), ((0, 1, 2, 3), 1, 1)])
def test_polygon_symmetry_time_shift(sigma, p, q):
    # q_j(t + 2 pi q/(2 p)) = -q_sigma(j)(t) along the exactly periodic orbit
    traj = ephemeris("isosceles").trajectory(0.0, 4 * np.pi)
    assert check_polygon_symmetry(traj, 2, sigma, p, q) < 1e-8


def test_polygon_symmetry_span_check():
    traj = choreography_trajectory("isosceles")
    with pytest.raises(ValueError):
        check_polygon_symmetry(traj, 2, SUPER_EIGHT_SIGMA, 1, 3)


@pytest.mark.parametrize("label", ["isosceles", "orthogonal"])
def test_ephemeris_periodic_and_faithful(label):
    eph = ephemeris(label)
    traj = choreography_trajectory(label)
    assert eph.period == pytest.approx(2 * np.pi)
    gap = max(np.max(np.abs(eph.vector(t) - traj.vector_at(t)))
              for t in np.linspace(traj.t0, traj.t0 + np.pi, 40))
    assert gap < 1e-8
    t = traj.t0 + 0.3
    np.testing.assert_allclose(eph.vector(t), eph.vector(t + 3 * eph.period), atol=1e-13)


def test_primaries_at_shape():
    assert primaries_at(0.0).shape == (4, 2)
    assert primaries_at([0.0, 1.0, 2.0]).shape == (3, 4, 2)
    np.testing.assert_array_equal(primaries_at(0.0), super_eight_isosceles().state.positions)


def _ring_force_balance(R, n, alpha):
    """Radial pull on a ring vertex at (R, 0) minus the centripetal term (unit rate)."""
    ring = n - 1
    pts = [np.zeros(2)] + [R * np.array([np.cos(2 * np.pi * k / ring), np.sin(2 * np.pi * k / ring)])
                           for k in range(ring)]
    me = pts[1]
    pull = sum(-(me - p) / np.linalg.norm(me - p) ** (alpha + 1) for p in pts if p is not me)
    return -pull[0] - R


@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("alpha", [1.0, 2.0, 3.0])
def test_maxwell_radius_matches_bisection(n, alpha):
    cc = maxwell_configuration(n, PotentialLaw(alpha))
    R = brentq(_ring_force_balance, 0.5, 3.0, args=(n, alpha), xtol=1e-15)
    assert np.linalg.norm(cc.points[1]) == pytest.approx(R, abs=1e-12)
    assert cc.residual <= 1e-12
    assert np.array_equal(cc.points[0], [0.0, 0.0]) or np.max(np.abs(cc.points[0])) < 1e-15
    assert polygon_symmetry_residual(cc) <= 1e-13


def test_maxwell_four_body_closed_form():
    # R^3 = 1 + (1/4) * 2 / sin(pi/3)
    cc = maxwell_configuration(4, GRAVITY)
    assert np.linalg.norm(cc.points[2]) == pytest.approx((1 + 1 / np.sqrt(3)) ** (1 / 3), abs=1e-14)


@pytest.mark.parametrize("n,alpha", [(4, 2.0), (5, 3.0), (3, 1.0)])
def test_relative_equilibrium_closes(n, alpha):
    cc = maxwell_configuration(n, PotentialLaw(alpha))
    assert relative_equilibrium_closure(cc) <= 1e-8


def test_relative_equilibrium_rotates_counterclockwise_as_exp_tJ():
    cc = maxwell_configuration(4)
    s = cc.relative_equilibrium(0.7)
    np.testing.assert_allclose(s.positions, cc.points @ rotation(0.7).T, atol=1e-15)


def test_solver_from_perturbed_guess():
    # equilateral Lagrange triangle: side^(alpha+1) = total mass for unit rotation rate
    rng = np.random.default_rng(3)
    ang = 2 * np.pi * np.arange(3) / 3
    guess = 0.6 * np.column_stack([np.cos(ang), np.sin(ang)]) + 0.05 * rng.normal(size=(3, 2))
    cc = solve_central_configuration(guess, np.ones(3), GRAVITY)
    d = np.linalg.norm(cc.points[0] - cc.points[1])
    assert cc.residual <= 1e-12
    assert d == pytest.approx(3 ** (1 / 3), abs=1e-12)


def test_residual_rejects_collisions():
    with pytest.raises(ValueError):
        central_configuration_residual([[0, 0], [0, 0]], [1, 1], GRAVITY)


def test_solver_gives_up():
    with pytest.raises(ConvergenceError):
        solve_central_configuration([[0, 0], [1, 0], [2, 0]], [1, 1, 1], GRAVITY, max_iter=1, tol=1e-300)
