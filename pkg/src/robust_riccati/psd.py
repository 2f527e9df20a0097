"""
Geometry of the cone of symmetric positive definite matrices.

Everything here goes through the symmetric eigensolver (``numpy.linalg.eigh``)
or a Cholesky factorization; nonsymmetric eigenproblems are avoided by
working with congruences such as ``P^{-1/2} Q P^{-1/2}``.
"""
from __future__ import annotations

import numpy as np
from scipy import linalg as sla

from .exceptions import BreakdownError, DomainError

#: relative threshold on ``lambda_min / max(1, lambda_max)`` for definiteness
PD_TOL = 1e-10
#: relative spectral gap below which two matrices count as equal in ``d_T``
SAME_POINT_TOL = 1e-12


def symmetrize(X):
    """Return ``(X + X^T) / 2`` as a float array."""
    X = np.asarray(X, dtype=float)
    return 0.5 * (X + X.T)


def eigvals_desc(P):
    """Eigenvalues of a symmetric matrix sorted ``lambda_1 >= ... >= lambda_n``."""
    return np.linalg.eigvalsh(symmetrize(P))[::-1]


def lambda_max(P):
    return float(np.linalg.eigvalsh(symmetrize(P))[-1])


def lambda_min(P):
    return float(np.linalg.eigvalsh(symmetrize(P))[0])


def is_positive_definite(P, tol=PD_TOL):
    """True iff ``lambda_min(P) > tol * max(1, lambda_max(P))``."""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or not np.all(np.isfinite(P)):
        return False
    w = np.linalg.eigvalsh(symmetrize(P))
    return bool(w[0] > tol * max(1.0, w[-1]))


def _spd_eigh(P, what):
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise DomainError(f"{what}: expected a square matrix, got shape {P.shape}")
    w, U = np.linalg.eigh(symmetrize(P))
    if not w[0] > 0:
        raise DomainError(f"{what}: matrix is not positive definite "
                          f"(lambda_min = {w[0]:.3e})")
    return w, U


def spd_function(P, func, what="spd_function"):
    """Apply a scalar function to the spectrum: ``U func(Lambda) U^T``."""
    w, U = _spd_eigh(P, what)
    return symmetrize((U * func(w)) @ U.T)


def spd_sqrt(P):
    """Principal square root of a positive definite matrix."""
    return spd_function(P, np.sqrt, "spd_sqrt")


def spd_inv_sqrt(P):
    """``P^{-1/2}`` for positive definite ``P``."""
    return spd_function(P, lambda w: 1.0 / np.sqrt(w), "spd_inv_sqrt")


def spd_log(P):
    """Matrix logarithm ``U log(Lambda) U^T`` of a positive definite matrix."""
    return spd_function(P, np.log, "spd_log")


def _log_spectrum_extremes(P, Q):
    # largest eigenvalue of P^{-1/2} Q P^{-1/2}, i.e. lambda_1(P^{-1} Q)
    S = spd_inv_sqrt(P)
    return float(np.linalg.eigvalsh(symmetrize(S @ Q @ S))[-1])


def thompson_distance(P, Q):
    """
    Thompson part metric ``max{log lambda_1(P^{-1}Q), log lambda_1(Q^{-1}P)}``.

    Both congruences are evaluated so the result is exactly symmetric in its
    arguments. Pairs whose relative spectra agree to ``SAME_POINT_TOL`` give 0.

    Parameters
    ----------
    P, Q : (n, n) array_like
        Positive definite matrices of the same order.

    Returns
    -------
    float
        Nonnegative distance.
    """
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if P.shape != Q.shape:
        raise DomainError(f"thompson_distance: shape mismatch {P.shape} vs {Q.shape}")
    a = _log_spectrum_extremes(P, Q)
    b = _log_spectrum_extremes(Q, P)
    if abs(a - 1.0) < SAME_POINT_TOL and abs(b - 1.0) < SAME_POINT_TOL:
        return 0.0
    return max(0.0, float(np.log(a)), float(np.log(b)))


def contraction_from_g(g):
    """Contraction coefficient ``(sqrt(g) / (1 + sqrt(1 + g)))**2`` for ``g >= 0``."""
    g = np.asarray(g, dtype=float)
    return (np.sqrt(g) / (1.0 + np.sqrt(1.0 + g))) ** 2


def contraction_bound(M, Omega, W):
    """
    Upper bound on the Thompson-metric Lipschitz constant of
    ``f(P) = M [P^{-1} + Omega]^{-1} M^T + W``.

    ``g = lambda_1(Omega^{-1} M^T W^{-1} M)`` is computed as the top eigenvalue
    of the congruence ``Omega^{-1/2} M^T W^{-1} M Omega^{-1/2}``.
    """
    M = np.asarray(M, dtype=float)
    if not is_positive_definite(Omega, 0.0):
        raise DomainError("contraction_bound: Omega is not positive definite")
    if not is_positive_definite(W, 0.0):
        raise DomainError("contraction_bound: W is not positive definite")
    Lw = np.linalg.cholesky(symmetrize(W))
    Y = sla.solve_triangular(Lw, M, lower=True) @ spd_inv_sqrt(Omega)
    g = max(0.0, float(np.linalg.eigvalsh(symmetrize(Y.T @ Y))[-1]))
    return float(contraction_from_g(g))


def loewner_geq(P, Q, slack=0.0):
    """True iff ``lambda_min(P - Q) >= -slack``."""
    return bool(lambda_min(np.asarray(P, float) - np.asarray(Q, float)) >= -slack)


def information_update(P, info):
    """
    Return ``[P^{-1} + info]^{-1}`` without inverting ``P``.

    With ``P = L L^T`` this equals ``L (I + L^T info L)^{-1} L^T``; ``info`` may be
    indefinite as long as the bracket stays positive definite.

    Raises
    ------
    BreakdownError
        If ``P^{-1} + info`` is not positive definite.
    """
    P = symmetrize(P)
    try:
        L = np.linalg.cholesky(P)
    except np.linalg.LinAlgError:
        raise DomainError("information_update: P is not positive definite") from None
    n = P.shape[0]
    inner = symmetrize(np.eye(n) + L.T @ symmetrize(info) @ L)
    try:
        cf = sla.cho_factor(inner, lower=True)
    except np.linalg.LinAlgError:
        raise BreakdownError(
            "P^{-1} + information term is not positive definite") from None
    return symmetrize(L @ sla.cho_solve(cf, L.T))


def riccati_like_map(P, M, Omega, W):
    """``M [P^{-1} + Omega]^{-1} M^T + W``."""
    M = np.asarray(M, dtype=float)
    return symmetrize(M @ information_update(P, Omega) @ M.T + np.asarray(W, float))
