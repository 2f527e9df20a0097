"""
Tolerance-to-risk-parameter bridge.

``gamma(theta, P) = 1/2 [log det(I - theta P) + tr (I - theta P)^{-1} - n]`` is
the relative entropy between ``N(0, I - theta P)`` and ``N(0, I)``. For a
tolerance ``c > 0`` the filter uses the unique ``theta`` in
``(0, 1 / lambda_1(P))`` with ``gamma(theta, P) = c``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .exceptions import DomainError
from .psd import symmetrize

#: relative inset of the root bracket from both ends of the admissible interval
BRACKET_EPS = 1e-14


def _spectrum(P):
    return np.linalg.eigvalsh(symmetrize(P))


def _check_domain(theta, lam):
    if not np.isfinite(theta) or theta < 0:
        raise DomainError(f"theta must be a finite nonnegative number, got {theta!r}")
    if theta * lam[-1] >= 1.0:
        raise DomainError(
            f"theta = {theta:.6g} >= 1/lambda_1(P) = {1.0 / lam[-1]:.6g}: "
            "tolerance budget saturates the spectral bound")


def gamma_from_spectrum(theta, lam):
    """``gamma`` in eigenvalue form; ``lam`` are the eigenvalues of ``P``."""
    x = theta * np.asarray(lam, dtype=float)
    # log(1-x) + 1/(1-x) - 1 written without cancellation for small x
    return 0.5 * float(np.sum(np.log1p(-x) + x / (1.0 - x)))


def dgamma_from_spectrum(theta, lam):
    lam = np.asarray(lam, dtype=float)
    z = 1.0 - theta * lam
    # -lam/z + lam/z**2 = theta lam**2 / z**2
    return 0.5 * float(np.sum(theta * lam**2 / z**2))


def gamma(theta, P):
    """
    Evaluate ``gamma(theta, P)``.

    Raises
    ------
    DomainError
        If ``theta < 0`` or ``theta >= 1 / lambda_1(P)``.
    """
    lam = _spectrum(P)
    _check_domain(theta, lam)
    return gamma_from_spectrum(theta, lam)


def gamma_dtheta(theta, P):
    """Exact derivative of ``gamma`` with respect to ``theta``."""
    lam = _spectrum(P)
    _check_domain(theta, lam)
    return dgamma_from_spectrum(theta, lam)


@dataclass(frozen=True)
class RiskParameter:
    """
    A solved risk-sensitivity parameter.

    ``step`` is the index ``t`` of the covariance ``P_t`` it was solved against;
    in the filter literature the same value is usually written ``theta_{t-1}``.
    """
    theta: float
    tolerance_c: float
    solved_against: np.ndarray
    step: Optional[int] = None

    @property
    def literature_index(self):
        return None if self.step is None else self.step - 1

    def matches(self, P):
        P = np.asarray(P, float)
        return P.shape == self.solved_against.shape and np.allclose(
            P, self.solved_against, rtol=1e-12, atol=0.0)


def solve_theta(c, P, step=None):
    """
    Solve ``gamma(theta, P) = c`` for ``theta``.

    A bracketing root finder runs on ``(eps, (1 - eps) / lambda_1(P))``, where
    ``gamma`` is continuous, strictly increasing, zero at the left end and
    unbounded at the right. One guarded Newton step polishes the root.

    Parameters
    ----------
    c : float
        Positive tolerance. ``c = 0`` is the risk-neutral case and is never
        routed through here.
    P : (n, n) array_like
        Positive definite covariance.
    step : int, optional
        Index of ``P`` in its iteration, recorded on the result.
    """
    if not np.isfinite(c) or c <= 0:
        raise DomainError(f"tolerance c must be positive, got {c!r}")
    P = symmetrize(P)
    lam = _spectrum(P)
    if lam[0] <= 0:
        raise DomainError("solve_theta: P is not positive definite")
    lo = BRACKET_EPS / lam[-1]
    hi = (1.0 - BRACKET_EPS) / lam[-1]
    f = lambda t: gamma_from_spectrum(t, lam) - c  # noqa: E731
    if f(hi) <= 0:
        raise DomainError(f"tolerance c = {c:.6g} exceeds gamma at the bracket edge")
    if f(lo) >= 0:
        theta = lo
    else:
        theta = brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                       maxiter=500)
        d = dgamma_from_spectrum(theta, lam)
        if d > 0:
            cand = theta - f(theta) / d
            if lo < cand < hi and abs(f(cand)) < abs(f(theta)):
                theta = cand
    P.setflags(write=False)
    return RiskParameter(float(theta), float(c), P, step)
