import json

import numpy as np
import pytest

from robust_riccati.certify import (CERTIFIED, CERTIFIED_NEUTRAL, EXCEEDS, NOT_CERTIFIED,
                                    _verdict, compute_certificate, default_q,
                                    lower_bound_ramp, verify_certificate_empirically)
from robust_riccati.exceptions import DomainError
from robust_riccati.gamma import gamma
from robust_riccati.nblock import build_nblock, find_phi
from robust_riccati.psd import loewner_geq
from robust_riccati.riccati import iterate_riccati


@pytest.fixture(scope="module")
def cert35():
    from robust_riccati import example_model
    return compute_certificate(example_model(), 8, 35)


def test_ramp_start_and_monotone(model):
    ramp = lower_bound_ramp(model, 40)
    np.testing.assert_array_equal(ramp[0], model.BBt)
    for a, b in zip(ramp, ramp[1:]):
        assert loewner_geq(b, a, 1e-8)


@pytest.mark.parametrize("q, reference, rel", [(10, 2.9e-3, 0.10), (20, 4.39e-2, 0.10),
                                           (35, 5.43e-2, 0.10)])
def test_c_max_reference_values(model, q, reference, rel):
    assert compute_certificate(model, 8, q).c_max == pytest.approx(reference, rel=rel)


def test_c_max_regression(cert35):
    assert cert35.c_max == pytest.approx(0.05490226240862361, rel=1e-9)
    assert cert35.phi_N == pytest.approx(0.001283267099847533, rel=1e-9)
    assert cert35.contraction_coefficient_at_phi == pytest.approx(0.9993042195639139, rel=1e-6)


def test_c_max_nondecreasing_in_q(model):
    vals = [compute_certificate(model, 8, q).c_max for q in (5, 10, 20, 35, 50)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_c_max_matches_gamma_oracle(model, cert35):
    phi = find_phi(build_nblock(model, 8))
    assert cert35.c_max == gamma(phi, lower_bound_ramp(model, 35)[-1])


def test_q_tilde(cert35):
    assert cert35.q_tilde == 5
    assert cert35.N == 8 and cert35.q == 35


def test_certificate_requires_N_at_least_n(model):
    with pytest.raises(DomainError):
        compute_certificate(model, 1, 10)


def test_verdicts(cert35):
    assert cert35.verdict is None
    assert cert35.with_user_c(0.05).verdict == CERTIFIED
    assert cert35.with_user_c(0.05).certified
    assert cert35.with_user_c(0.0).verdict == CERTIFIED_NEUTRAL
    assert cert35.with_user_c(0.06).verdict == EXCEEDS
    assert not cert35.with_user_c(0.06).certified
    assert _verdict(1e-4, 1.0, 1.0) == NOT_CERTIFIED
    with pytest.raises(DomainError):
        cert35.with_user_c(-1.0)


def test_json_round_trip_and_determinism(model, cert35):
    data = json.loads(cert35.to_json())
    assert data["c_max"] == cert35.c_max
    assert data["phi_N"] == cert35.phi_N
    np.testing.assert_array_equal(np.array(data["P_bar_q"]), cert35.P_bar_q)
    assert data["provenance"]["model_sha256"] == model.fingerprint()
    again = compute_certificate(model, 8, 35)
    assert again.to_json() == cert35.to_json()


def test_theta_capped_after_ramp(model, cert35):
    c = 0.9 * cert35.c_max
    for P0 in (model.BBt, 10 * np.eye(2), np.diag([1.0, 50.0])):
        tr = iterate_riccati(model, P0, c, max_steps=100, dist_tol=0.0)
        th = tr.thetas
        assert np.all(th[cert35.q + 1:] < cert35.phi_N + 1e-10)


def test_empirical_verification_inside(model, cert35):
    for c in (0.05, cert35.c_max / 2):
        rep = verify_certificate_empirically(model, cert35, c)
        assert rep.within_certificate
        assert rep.passed, rep.summary()
        assert len(rep.limits) == 5
        assert all(r < 1 for r in rep.decay_factors)


def test_empirical_verification_outside_is_report_only(model, cert35):
    rep = verify_certificate_empirically(model, cert35, 2 * cert35.c_max, trials=3)
    assert not rep.within_certificate
    assert "outside" in rep.summary()


def test_verify_rejects_nonpositive_c(model, cert35):
    with pytest.raises(DomainError):
        verify_certificate_empirically(model, cert35, 0.0)


def test_default_q(model):
    q = default_q(model)
    ramp = lower_bound_ramp(model, q + 1)
    assert np.linalg.eigvalsh(ramp[q + 1] - ramp[q])[-1] < 1e-8
    if q > 0:
        assert np.linalg.eigvalsh(ramp[q] - ramp[q - 1])[-1] >= 1e-8
