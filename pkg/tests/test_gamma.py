import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_spd
from robust_riccati.exceptions import DomainError
from robust_riccati.gamma import gamma, gamma_dtheta, solve_theta


def _scalar_gamma(theta, lam):
    return 0.5 * (math.log(1 - theta * lam) + 1 / (1 - theta * lam) - 1)


def test_gamma_zero_theta(rng):
    for n in (1, 3, 6):
        assert gamma(0.0, random_spd(rng, n)) == 0.0


def test_gamma_scalar_closed_form():
    expected = 0.5 * (math.log(0.5) + 2 - 1)
    assert expected == pytest.approx(0.153426, abs=1e-6)
    assert gamma(0.5, np.array([[1.0]])) == pytest.approx(expected, rel=1e-14)


def test_gamma_matches_determinant_form(rng):
    P = random_spd(rng, 4)
    theta = 0.7 / np.linalg.eigvalsh(P)[-1]
    M = np.eye(4) - theta * P
    direct = 0.5 * (np.log(np.linalg.det(M)) + np.trace(np.linalg.inv(M)) - 4)
    assert gamma(theta, P) == pytest.approx(direct, rel=1e-12)


def test_gamma_domain():
    P = np.diag([2.0, 1.0])
    with pytest.raises(DomainError, match="saturates"):
        gamma(0.5, P)
    with pytest.raises(DomainError):
        gamma(-1e-3, P)
    with pytest.raises(DomainError):
        gamma_dtheta(0.6, P)


def test_gamma_blows_up_at_boundary(rng):
    for _ in range(10):
        P = random_spd(rng, 3)
        lam1 = np.linalg.eigvalsh(P)[-1]
        assert gamma((1 - 1e-6) / lam1, P) > 1e3


def test_dtheta_examples():
    assert abs(gamma_dtheta(1e-9, np.diag([3.0, 1.0]))) < 1e-6
    assert gamma_dtheta(0.5, np.array([[1.0]])) == pytest.approx(0.5 * (-2 + 4), rel=1e-14)


@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.floats(0.05, 0.9))
def test_dtheta_vs_central_difference(seed, n, frac):
    P = random_spd(np.random.default_rng(seed), n)
    theta = frac / np.linalg.eigvalsh(P)[-1]
    h = 1e-7
    fd = (gamma(theta + h, P) - gamma(theta - h, P)) / (2 * h)
    assert abs(gamma_dtheta(theta, P) - fd) < 1e-5


@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.floats(1e-4, 0.98))
def test_solve_theta_round_trip(seed, n, frac):
    P = random_spd(np.random.default_rng(seed), n)
    theta0 = frac / np.linalg.eigvalsh(P)[-1]
    c = gamma(theta0, P)
    rp = solve_theta(c, P)
    assert rp.theta == pytest.approx(theta0, rel=1e-10)
    assert abs(gamma(rp.theta, P) - c) <= 1e-12 * max(1.0, c)
    assert 0 < rp.theta < 1 / np.linalg.eigvalsh(P)[-1]


def test_solve_theta_scalar():
    rp = solve_theta(0.153426, np.array([[1.0]]))
    # c is the closed form value rounded to 6 decimals
    assert rp.theta == pytest.approx(0.5, abs=1e-5)
    exact = solve_theta(_scalar_gamma(0.5, 1.0), np.array([[1.0]]))
    assert exact.theta == pytest.approx(0.5, rel=1e-12)


def test_solve_theta_monotone_in_c(model):
    from robust_riccati.riccati import iterate_riccati
    P = iterate_riccati(model, None, 0.0).final
    thetas = [solve_theta(c, P).theta for c in (1e-2, 1e-3, 1e-4)]
    assert thetas[0] > thetas[1] > thetas[2] > 0


@pytest.mark.parametrize("c", [0.0, -1.0, float("nan")])
def test_solve_theta_rejects_nonpositive(c):
    with pytest.raises(DomainError):
        solve_theta(c, np.eye(2))


def test_solve_theta_tolerance_extremes(rng):
    P = random_spd(rng, 3)
    for c in (1e-10, 1e-3, 1.0, 50.0, 1e3):
        rp = solve_theta(c, P, step=7)
        assert abs(gamma(rp.theta, P) - c) <= 1e-12 * max(1.0, c)
        assert rp.step == 7 and rp.literature_index == 6
        assert rp.matches(P)


def test_gamma_properties_randomized(rng):
    for _ in range(100):
        n = rng.integers(1, 5)
        Q = random_spd(rng, n)
        P = Q + random_spd(rng, n, 0.5)
        top = 0.99 / np.linalg.eigvalsh(P)[-1]
        grid = np.linspace(0, top, 25)
        vals = [gamma(t, P) for t in grid]
        assert np.all(np.diff(vals) > 0)
        assert all(v > 0 for v in vals[1:])
        assert all(gamma(t, P) >= gamma(t, Q) for t in grid)
