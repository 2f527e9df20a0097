import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from conftest import random_invertible, random_spd
from robust_riccati.exceptions import BreakdownError, DomainError
from robust_riccati.nblock import build_nblock, distorted_gramians, nblock_gains
from robust_riccati.psd import (contraction_bound, contraction_from_g, information_update,
                                is_positive_definite, loewner_geq, riccati_like_map,
                                spd_log, spd_sqrt, thompson_distance)
from robust_riccati.riccati import riccati_step

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=1, max_value=5)


def _relfro(X, Y):
    return np.linalg.norm(X - Y) / np.linalg.norm(Y)


def test_sqrt_examples():
    np.testing.assert_array_equal(spd_sqrt(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(spd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-15)


@given(seeds, dims)
def test_sqrt_round_trip(seed, n):
    P = random_spd(np.random.default_rng(seed), n)
    R = spd_sqrt(P)
    assert _relfro(R @ R, P) < 1e-10
    np.testing.assert_array_equal(R, R.T)
    assert is_positive_definite(R)


def test_log_examples():
    np.testing.assert_allclose(spd_log(np.eye(2)), np.zeros((2, 2)), atol=0)
    np.testing.assert_allclose(spd_log(np.diag([math.e, math.e**2])), np.diag([1.0, 2.0]),
                               rtol=1e-15, atol=1e-15)


@given(seeds, dims)
def test_log_round_trip(seed, n):
    P = random_spd(np.random.default_rng(seed), n)
    assert _relfro(expm(spd_log(P)), P) < 1e-8


@pytest.mark.parametrize("f", [spd_sqrt, spd_log])
def test_non_pd_rejected(f):
    with pytest.raises(DomainError):
        f(np.diag([1.0, -1.0]))


def test_thompson_examples():
    P = np.array([[2.0, 0.3], [0.3, 1.0]])
    assert thompson_distance(P, P) == 0.0
    for a in (0.01, 0.5, 3.0, 250.0):
        assert thompson_distance(np.eye(3), a * np.eye(3)) == pytest.approx(abs(math.log(a)),
                                                                           rel=1e-13)


@given(seeds, dims)
def test_thompson_dual_formula(seed, n):
    rng = np.random.default_rng(seed)
    P, Q = random_spd(rng, n), random_spd(rng, n, 3.0)
    Pih = np.linalg.inv(spd_sqrt(P))
    oracle = np.linalg.norm(spd_log(Pih @ Q @ Pih), 2)
    assert abs(thompson_distance(P, Q) - oracle) < 1e-10


def test_thompson_rejects_indefinite():
    with pytest.raises(DomainError):
        thompson_distance(np.eye(2), np.diag([1.0, -2.0]))


@settings(max_examples=50)
@given(seeds, dims)
def test_thompson_metric_axioms(seed, n):
    rng = np.random.default_rng(seed)
    P, Q, R = (random_spd(rng, n, s) for s in (1.0, 2.0, 0.5))
    assert thompson_distance(P, Q) == thompson_distance(Q, P)
    assert thompson_distance(P, R) <= thompson_distance(P, Q) + thompson_distance(Q, R) + 1e-10
    G = random_invertible(rng, n)
    assert abs(thompson_distance(G @ P @ G.T, G @ Q @ G.T) - thompson_distance(P, Q)) < 1e-8
    assert abs(thompson_distance(np.linalg.inv(P), np.linalg.inv(Q))
               - thompson_distance(P, Q)) < 1e-8


def test_contraction_bound_examples():
    assert contraction_bound(np.zeros((2, 2)), np.eye(2), np.eye(2)) == 0.0
    # g = 1: (1 / (1 + sqrt 2))^2 = 3 - 2 sqrt 2
    assert contraction_bound(np.eye(2), np.eye(2), np.eye(2)) == pytest.approx(
        3 - 2 * math.sqrt(2), rel=1e-14)
    assert 3 - 2 * math.sqrt(2) == pytest.approx(0.17157, abs=5e-6)


def test_contraction_bound_example_model_theta_zero(model):
    sys = build_nblock(model, 8)
    gram = distorted_gramians(sys, 0.0)
    _, _, alpha = nblock_gains(sys, 0.0)
    xi = contraction_bound(alpha, gram.Omega, gram.W)
    assert xi < 1
    # regression baseline
    assert xi == pytest.approx(0.50076936995417, rel=1e-9)


def test_contraction_bound_rejects_indefinite():
    with pytest.raises(DomainError):
        contraction_bound(np.eye(2), np.diag([1.0, -1.0]), np.eye(2))
    with pytest.raises(DomainError):
        contraction_bound(np.eye(2), np.eye(2), np.diag([1.0, 0.0]))


def test_contraction_from_g_monotone_and_below_one():
    g = np.concatenate([[0.0], np.logspace(-8, 8, 400)])
    xi = contraction_from_g(g)
    assert np.all(np.diff(xi) >= 0)
    assert np.all(xi < 1)


@settings(max_examples=60)
@given(seeds, dims)
def test_contraction_bound_contract(seed, n):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n)) * rng.uniform(0.1, 3.0)
    Omega, W = random_spd(rng, n), random_spd(rng, n, rng.uniform(0.1, 5.0))
    P, Q = random_spd(rng, n), random_spd(rng, n, 4.0)
    xi = contraction_bound(M, Omega, W)
    lhs = thompson_distance(riccati_like_map(P, M, Omega, W), riccati_like_map(Q, M, Omega, W))
    assert lhs <= xi * thompson_distance(P, Q) + 1e-9


def test_loewner_examples(model):
    assert loewner_geq(np.eye(2), np.zeros((2, 2)), 0)
    assert not loewner_geq(np.diag([1.0, 2.0]), np.diag([2.0, 1.0]), 0)
    P = model.BBt
    for _ in range(30):
        P_next = riccati_step(model, P)
        assert loewner_geq(P_next, P, 1e-8 * max(1.0, np.linalg.norm(P_next, 2)))
        P = P_next


def test_information_update_matches_explicit_inverse(rng):
    P, Om = random_spd(rng, 4), random_spd(rng, 4)
    oracle = np.linalg.inv(np.linalg.inv(P) + Om)
    assert _relfro(information_update(P, Om), oracle) < 1e-12
    with pytest.raises(BreakdownError):
        information_update(np.eye(2), -2.0 * np.eye(2))
