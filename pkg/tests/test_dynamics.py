import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from symorbits.configs import super_eight_isosceles
from symorbits.dynamics import (
    GRAVITY,
    CollisionError,
    PotentialLaw,
    SystemState,
    accelerations,
    conserved_quantities,
    min_pairwise_distance,
    nbody_rhs,
    potential_value,
    rotation,
)

coords = st.floats(-5, 5, allow_nan=False)


def brute_force_accel(q, m, alpha):
    out = np.zeros_like(q)
    for i in range(len(q)):
        for j in range(len(q)):
            if i != j:
                d = q[i] - q[j]
                out[i] -= m[j] * d / np.sqrt(d @ d) ** (alpha + 1)
    return out


@pytest.mark.parametrize("lam,alpha,expected", [(1.0, 2, 1.0), (1.0, 1, 0.0), (2.0, 3, 0.125)])
def test_potential_values(lam, alpha, expected):
    assert potential_value(lam, PotentialLaw(alpha)) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("lam", [0.0, -1.0])
def test_potential_domain(lam):
    with pytest.raises(ValueError):
        potential_value(lam, GRAVITY)


def test_alpha_below_one_rejected():
    with pytest.raises(ValueError):
        PotentialLaw(0.5)


@pytest.mark.parametrize("alpha", [1.0, 1.5, 2.0, 3.0])
def test_kernel_derivative_matches_finite_difference(alpha):
    law = PotentialLaw(alpha)
    lam, h = 1.7, 1e-6
    fd = (law.phi(lam + h) - law.phi(lam - h)) / (2 * h)
    assert law.dphi(lam) == pytest.approx(fd, rel=1e-8)


def test_state_validation():
    with pytest.raises(ValueError):
        SystemState(0.0, [[0, 0]], [[0, 0], [1, 1]])
    with pytest.raises(ValueError):
        SystemState(0.0, [[np.nan, 0]], [[0, 0]])
    s = SystemState(0.5, [[1, 2]], [[3, 4]])
    assert np.array_equal(SystemState.from_vector(0.5, s.to_vector()).positions, s.positions)
    with pytest.raises(ValueError):
        s.positions[0, 0] = 9.0


def test_single_body_has_no_acceleration():
    s = SystemState(0.0, [[3.0, -1.0]], [[0.0, 0.0]])
    assert np.array_equal(accelerations(s, [1.0], GRAVITY), np.zeros((1, 2)))


def test_two_body_pair():
    s = SystemState(0.0, [[-0.5, 0.0], [0.5, 0.0]], np.zeros((2, 2)))
    a = accelerations(s, [1.0, 1.0], GRAVITY)
    np.testing.assert_allclose(a, [[1.0, 0.0], [-1.0, 0.0]], atol=1e-15)


def test_satellite_next_to_super_eight_matches_pairwise_sum():
    ic = super_eight_isosceles().state
    q = np.vstack([ic.positions, [[4.116104103490420, 0.0]]])
    m = np.array([1, 1, 1, 1, 0.0])
    s = SystemState(0.0, q, np.zeros_like(q))
    np.testing.assert_allclose(accelerations(s, m, GRAVITY), brute_force_accel(q, m, 2.0), atol=1e-14)


def test_collision_guard():
    s = SystemState(0.0, [[0, 0], [1e-8, 0]], np.zeros((2, 2)))
    with pytest.raises(CollisionError) as err:
        accelerations(s, [1, 1], GRAVITY)
    assert err.value.pair == (0, 1)


def test_massless_pair_may_overlap():
    # two test particles do not interact with each other
    s = SystemState(0.0, [[0, 0], [2, 0], [2, 1e-9]], np.zeros((3, 2)))
    a = accelerations(s, [1, 0, 0], GRAVITY)
    assert np.all(np.isfinite(a))


@given(st.lists(st.tuples(coords, coords), min_size=2, max_size=5, unique=True),
       st.sampled_from([1.0, 2.0, 3.0]))
def test_action_reaction(points, alpha):
    q = np.array(points)
    d = q[:, None] - q[None]
    r = np.sqrt((d ** 2).sum(-1)) + np.eye(len(q))
    if r.min() < 0.1:
        return
    m = np.linspace(0.5, 2.0, len(q))
    a = accelerations(SystemState(0, q, np.zeros_like(q)), m, PotentialLaw(alpha))
    assert np.max(np.abs((m[:, None] * a).sum(0))) < 1e-13 * max(1.0, np.abs(m[:, None] * a).max())


@given(st.floats(0, 2 * np.pi), st.sampled_from([1.0, 2.0, 3.0]))
def test_rotation_equivariance(angle, alpha):
    q = super_eight_isosceles().state.positions
    R = rotation(angle)
    m = np.ones(4)
    law = PotentialLaw(alpha)
    a = accelerations(SystemState(0, q, q), m, law)
    ar = accelerations(SystemState(0, q @ R.T, q), m, law)
    np.testing.assert_allclose(ar, a @ R.T, atol=1e-13)


@given(st.floats(0.2, 5.0))
def test_inverse_square_scaling(s):
    q = super_eight_isosceles().state.positions
    a = accelerations(SystemState(0, q, q), np.ones(4), GRAVITY)
    a_s = accelerations(SystemState(0, s * q, q), np.ones(4), GRAVITY)
    np.testing.assert_allclose(a_s, a / s ** 2, rtol=1e-13, atol=1e-14)


def test_massless_satellite_leaves_primaries_bit_identical():
    ic = super_eight_isosceles().state
    four = nbody_rhs(np.ones(4), GRAVITY)(0.0, ic.to_vector())
    q = np.vstack([ic.positions, [[4.0, 0.0]]])
    v = np.vstack([ic.velocities, [[0.0, 1.0]]])
    five = nbody_rhs([1, 1, 1, 1, 0], GRAVITY)(0.0, SystemState(0, q, v).to_vector())
    assert np.array_equal(five[:8], four[:8])
    assert np.array_equal(five[10:18], four[8:16])


def test_super_eight_is_centred():
    inv = conserved_quantities(super_eight_isosceles().state, np.ones(4), GRAVITY)
    assert np.max(np.abs(inv.center_of_mass)) < 1e-14
    assert np.max(np.abs(inv.linear_momentum)) < 1e-14


def test_single_body_at_rest():
    inv = conserved_quantities(SystemState(0, [[1, 2]], [[0, 0]]), [3.0], GRAVITY)
    assert inv.energy == 0.0
    assert np.array_equal(inv.linear_momentum, [0.0, 0.0])


def test_circular_two_body_energy():
    # masses M and m on a circle about their barycentre with separation a:
    # E = -G M m / (2 a) in the gravitational case
    M, m, a = 3.0, 1.0, 2.0
    w = np.sqrt((M + m) / a ** 3)
    r1, r2 = m * a / (M + m), M * a / (M + m)
    s = SystemState(0, [[-r1, 0], [r2, 0]], [[0, -w * r1], [0, w * r2]])
    inv = conserved_quantities(s, [M, m], GRAVITY)
    assert inv.energy == pytest.approx(-M * m / (2 * a), rel=1e-14)
    assert inv.angular_momentum == pytest.approx(M * m / (M + m) * a * a * w, rel=1e-14)


def test_min_pairwise_distance():
    assert min_pairwise_distance(SystemState(0, [[0, 0], [3, 4]], np.zeros((2, 2)))) == 5.0
    assert min_pairwise_distance(SystemState(0, [[1, 1], [1, 1]], np.zeros((2, 2)))) == 0.0
    q = super_eight_isosceles().state.positions
    brute = min(np.linalg.norm(q[i] - q[j]) for i, j in itertools.combinations(range(4), 2))
    assert min_pairwise_distance(super_eight_isosceles().state) == brute
