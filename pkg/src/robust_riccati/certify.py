"""
Convergence certificate for the robust Riccati iteration.

The certificate combines three ingredients:

* ``phi_N``: a threshold such that the distorted Gramians of the N-block
  map stay positive definite for every ``Theta < phi_N I``;
* ``P_bar_q``: the ``q``-th risk-neutral iterate from ``BB^T``, a lower bound on
  every robust iterate after ``q + 1`` steps;
* ``c_max = gamma(phi_N, P_bar_q)``.

Any tolerance ``0 < c < c_max`` keeps the solved parameters below ``phi_N``
from step ``q + 1`` on, so the N-block map contracts and the iteration has a
unique limit.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .exceptions import DomainError
from .gamma import gamma
from .nblock import (PHI_PULLBACK, build_nblock, distorted_gramians, find_phi,
                     nblock_gains)
from .psd import contraction_bound, lambda_max, symmetrize, thompson_distance
from .riccati import DIST_TOL, MAX_STEPS, iterate_riccati, riccati_step

RAMP_TOL = 1e-8
RAMP_CAP = 200

CERTIFIED = "certified"
CERTIFIED_NEUTRAL = "certified (risk-neutral)"
NOT_CERTIFIED = "not certified"
EXCEEDS = "c exceeds c_max"


def lower_bound_ramp(model, q):
    """Risk-neutral iterates ``P_bar_0 = BB^T, ..., P_bar_q``."""
    if q < 0:
        raise DomainError("q must be nonnegative")
    P = model.BBt
    ramp = [P]
    for _ in range(q):
        P = riccati_step(model, P)
        ramp.append(P)
    return ramp


def default_q(model, tol=RAMP_TOL, cap=RAMP_CAP):
    """Smallest ``q`` with ``lambda_1(P_bar_{q+1} - P_bar_q) < tol``, at most ``cap``."""
    P = model.BBt
    for q in range(cap):
        P_next = riccati_step(model, P)
        if lambda_max(P_next - P) < tol:
            return q
        P = P_next
    return cap


@dataclass
class ConvergenceCertificate:
    N: int
    q: int
    q_tilde: int
    phi_tilde: float
    phi_N: float
    P_bar_q: np.ndarray
    c_max: float
    contraction_coefficient_at_phi: float
    user_c: Optional[float] = None
    verdict: Optional[str] = None
    provenance: dict = field(default_factory=dict)

    @property
    def certified(self):
        return self.verdict in (CERTIFIED, CERTIFIED_NEUTRAL)

    def to_dict(self):
        return {
            "N": self.N,
            "q": self.q,
            "q_tilde": self.q_tilde,
            "phi_tilde": self.phi_tilde,
            "phi_N": self.phi_N,
            "c_max": self.c_max,
            "contraction_coefficient_at_phi": self.contraction_coefficient_at_phi,
            "user_c": self.user_c,
            "verdict": self.verdict,
            "P_bar_q": np.asarray(self.P_bar_q).tolist(),
            "provenance": dict(self.provenance),
        }

    def to_json(self, **kwargs):
        kwargs.setdefault("indent", 2)
        return json.dumps(self.to_dict(), **kwargs)

    def with_user_c(self, c):
        """Copy of the certificate with a verdict for tolerance ``c``."""
        return ConvergenceCertificate(
            self.N, self.q, self.q_tilde, self.phi_tilde, self.phi_N, self.P_bar_q,
            self.c_max, self.contraction_coefficient_at_phi, c,
            _verdict(c, self.c_max, self.contraction_coefficient_at_phi),
            dict(self.provenance))


def _verdict(c, c_max, witness):
    if c is None:
        return None
    if not np.isfinite(c) or c < 0:
        raise DomainError(f"tolerance c must be nonnegative, got {c!r}")
    if not witness < 1.0:
        return NOT_CERTIFIED
    if c == 0:
        return CERTIFIED_NEUTRAL
    if c < c_max:
        return CERTIFIED
    return EXCEEDS


def contraction_witness(sys, phi, pullback=PHI_PULLBACK):
    """Contraction coefficient bound of the N-block map at ``Theta = phi (1 - pullback) I``."""
    theta = phi * (1.0 - pullback)
    gram = distorted_gramians(sys, theta)
    if not gram.positive_definite:
        return 1.0
    _, _, alpha = nblock_gains(sys, theta)
    return contraction_bound(alpha, gram.Omega, gram.W)


def compute_certificate(model, N, q=None, user_c=None, definiteness_tol=None):
    """
    Build the convergence certificate for block length ``N`` and ramp length ``q``.

    ``q=None`` picks the ramp length where the risk-neutral iterates settle.
    """
    if N < model.n:
        raise DomainError(f"certification needs N >= n = {model.n}, got N = {N}")
    if q is None:
        q = default_q(model)
    if q < 0:
        raise DomainError("q must be nonnegative")
    sys = build_nblock(model, N)
    phi_N = find_phi(sys, definiteness_tol)
    P_bar_q = lower_bound_ramp(model, q)[-1]
    c_max = gamma(phi_N, P_bar_q)
    witness = contraction_witness(sys, phi_N)
    provenance = {
        "model_sha256": model.fingerprint(),
        "N": N,
        "q": q,
        "phi_pullback": PHI_PULLBACK,
        "definiteness_tol": (1e-12 * lambda_max(sys.Omega_N)
                             if definiteness_tol is None else definiteness_tol),
    }
    return ConvergenceCertificate(
        N=N, q=q, q_tilde=math.ceil((q + 1) / N), phi_tilde=sys.phi_tilde,
        phi_N=phi_N, P_bar_q=P_bar_q, c_max=c_max,
        contraction_coefficient_at_phi=witness, user_c=user_c,
        verdict=_verdict(user_c, c_max, witness), provenance=provenance)


@dataclass
class EmpiricalReport:
    c: float
    c_max: float
    within_certificate: bool
    converged: List[bool]
    steps: List[Optional[int]]
    limits: List[np.ndarray]
    max_pairwise_distance: float
    decay_factors: List[float]
    limit_tol: float = 1e-6

    @property
    def all_converged(self):
        return all(self.converged)

    @property
    def passed(self):
        return self.all_converged and self.max_pairwise_distance < self.limit_tol

    def summary(self):
        lines = [f"c = {self.c:.6g}, c_max = {self.c_max:.6g} "
                 f"({'inside' if self.within_certificate else 'outside'} certified range)"]
        for i, (ok, st, rho) in enumerate(zip(self.converged, self.steps, self.decay_factors)):
            state = f"converged in {st} steps" if ok else "did not converge"
            lines.append(f"trial {i}: {state}, decay factor ~ {rho:.4g}")
        lines.append(f"max pairwise d_T of limits: {self.max_pairwise_distance:.3e}")
        lines.append(f"result: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _random_spd(rng, n, scale):
    G = rng.standard_normal((n, n))
    return symmetrize(scale * (G @ G.T / n + 0.1 * np.eye(n)))


def default_initial_conditions(n, seed=0):
    """``1e-2 I``, ``I``, ``1e2 I`` and two random SPD matrices."""
    rng = np.random.default_rng(seed)
    return [1e-2 * np.eye(n), np.eye(n), 1e2 * np.eye(n),
            _random_spd(rng, n, 1.0), _random_spd(rng, n, 10.0)]


def _decay_factor(distances):
    d = np.asarray([x for x in distances if np.isfinite(x) and x > 0])
    if d.size < 3:
        return float("nan")
    tail = d[-min(d.size, 50):]
    return float(np.exp(np.mean(np.diff(np.log(tail)))))


def verify_certificate_empirically(model, certificate, c, trials=5, seed=0,
                                   initial_conditions=None, max_steps=MAX_STEPS,
                                   dist_tol=DIST_TOL, limit_tol=1e-6):
    """
    Run the robust iteration from several initial conditions and compare limits.

    Tolerances at or above ``c_max`` are allowed; the report just records that
    they fall outside the certified range.
    """
    if not c > 0:
        raise DomainError("empirical verification needs c > 0")
    if initial_conditions is None:
        base = default_initial_conditions(model.n, seed)
        if trials <= len(base):
            initial_conditions = base[:trials]
        else:
            ss = np.random.SeedSequence(seed).spawn(trials - len(base))
            initial_conditions = base + [
                _random_spd(np.random.default_rng(s), model.n, 10.0 ** (i % 5 - 2))
                for i, s in enumerate(ss)]
    converged, steps, limits, decays = [], [], [], []
    for P0 in initial_conditions:
        tr = iterate_riccati(model, P0, c, max_steps=max_steps, dist_tol=dist_tol)
        converged.append(tr.converged)
        steps.append(tr.converged_at)
        limits.append(tr.final)
        decays.append(_decay_factor(tr.distances))
    worst = 0.0
    for i in range(len(limits)):
        for j in range(i + 1, len(limits)):
            worst = max(worst, thompson_distance(limits[i], limits[j]))
    return EmpiricalReport(c, certificate.c_max, c < certificate.c_max, converged,
                           steps, limits, worst, decays, limit_tol)
