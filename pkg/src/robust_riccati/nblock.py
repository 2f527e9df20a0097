"""
Downsampled (N-block) Krein-space model of the robust filter.

Sampling the state every ``N`` steps gives

    x_{k+1} = A^N x_k + R_N u_k
    y_k     = O_N x_k + D_N v_k + H_N u_k
    0       = O^R_N x_k + v^R_k + L_N u_k

where every stacked vector lists its newest sample first
(``u_k = [u_{kN+N-1}; ...; u_{kN}]``). The pseudo-observation noise ``v^R`` has
indefinite weight ``-Theta^{-1}`` with ``Theta = diag(theta's) (x) I_n``, which
turns the robust covariance recursion over ``N`` steps into one Riccati-like map

    P -> alpha [P^{-1} + Omega_Theta]^{-1} alpha^T + W_Theta.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg as sla

from .exceptions import (BreakdownError, CertificationError, DomainError,
                         NumericError, StructuralError)
from .psd import information_update, lambda_max, lambda_min, symmetrize

#: refuse to assemble systems whose Krein Gramian would exceed this order
MAX_BLOCK_DIM = 4096
PHI_PULLBACK = 1e-6
PHI_RTOL = 1e-9


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)


@dataclass(frozen=True)
class NBlockSystem:
    """
    Structural matrices of the N-block model plus derived constants.

    ``X`` is ``L_N (I + H_N^T (D_N D_N^T)^{-1} H_N)^{-1} L_N^T``, the matrix
    whose top eigenvalue sets ``phi_tilde = 1 / lambda_1(X)``.
    """
    N: int
    n: int
    m: int
    p: int
    A_N: np.ndarray
    R: np.ndarray
    O: np.ndarray
    O_R: np.ndarray
    D: np.ndarray
    H: np.ndarray
    L: np.ndarray
    noise_info: np.ndarray      # I + H^T (D D^T)^{-1} H
    M11: np.ndarray             # D D^T + H H^T
    X: np.ndarray
    J: np.ndarray
    Omega_N: np.ndarray
    phi_tilde: float

    def theta_diagonal(self, theta):
        """Length ``N n`` diagonal of ``Theta`` from a ThetaBlock, scalar or vector."""
        if isinstance(theta, ThetaBlock):
            if len(theta.thetas) != self.N:
                raise StructuralError(
                    f"ThetaBlock has {len(theta.thetas)} entries, expected N = {self.N}")
            return np.repeat(np.asarray(theta.thetas, float), self.n)
        d = np.atleast_1d(np.asarray(theta, dtype=float))
        if d.size == 1:
            d = np.full(self.N * self.n, float(d[0]))
        elif d.size == self.N:
            d = np.repeat(d, self.n)
        elif d.size != self.N * self.n:
            raise StructuralError(
                f"theta must have 1, N or N*n entries, got {d.size}")
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise DomainError("theta entries must be finite and nonnegative")
        return d


@dataclass(frozen=True)
class ThetaBlock:
    """
    Risk parameters driving one N-block step, newest first.

    For block ``k`` the entries are the parameters solved against
    ``P_{kN+N-1}, ..., P_{kN}`` (conventionally ``theta_{kN+N-2} .. theta_{kN-1}``).
    """
    thetas: tuple

    def __post_init__(self):
        th = tuple(float(t) for t in self.thetas)
        if not th or any(not (t > 0) or not np.isfinite(t) for t in th):
            raise DomainError("ThetaBlock entries must be positive")
        object.__setattr__(self, "thetas", th)

    def as_diagonal(self, n):
        return np.diag(np.repeat(self.thetas, n))

    @classmethod
    def from_trace(cls, thetas: Sequence[float], k, N):
        """
        Build block ``k`` from parameters indexed by the covariance step they
        were solved against (``thetas[t]`` pairs with ``P_t``).
        """
        thetas = np.asarray(thetas, dtype=float)
        if (k + 1) * N > len(thetas):
            raise StructuralError(
                f"need parameters up to step {(k + 1) * N - 1}, have {len(thetas)}")
        return cls(tuple(thetas[k * N + N - 1 - i] for i in range(N)))


def markov_parameter(A, B, t):
    """``A^{t-1} B`` for ``t >= 1``, zero otherwise."""
    if t < 1:
        return np.zeros_like(np.asarray(B, float))
    return np.linalg.matrix_power(A, t - 1) @ B


def _block_hankel(first_row_blocks, N, rows, cols):
    # entry (i, j) is first_row_blocks[j - i] for j > i (block 0 is never used)
    out = np.zeros((N * rows, N * cols))
    for i in range(N):
        for j in range(i + 1, N):
            out[i * rows:(i + 1) * rows, j * cols:(j + 1) * cols] = first_row_blocks[j - i]
    return out


def build_nblock(model, N, max_dim=MAX_BLOCK_DIM):
    """
    Assemble the N-block structural matrices for ``model``.

    All stacking orders live here: ``R_N = [B, AB, ..., A^{N-1}B]``,
    ``O_N = [CA^{N-1}; ...; CA; C]``, ``O^R_N = [A^{N-1}; ...; A; I]``,
    ``D_N = I_N (x) D`` and the strictly upper block Hankel matrices
    ``H_N`` / ``L_N`` with block ``(i, j)`` equal to ``CA^{j-i-1}B`` / ``A^{j-i-1}B``.
    """
    N = int(N)
    if N < 1:
        raise StructuralError("N must be at least 1")
    A, B, C, D = model.A, model.B, model.C, model.D
    n, m, p = model.n, model.m, model.p
    if N * (n + p) > max_dim:
        raise StructuralError(f"N-block Gramian of order {N * (n + p)} exceeds cap {max_dim}")
    powers = [np.eye(n)]
    for _ in range(N):
        powers.append(A @ powers[-1])
    A_N = powers[N]
    R = np.hstack([powers[j] @ B for j in range(N)])
    O = np.vstack([C @ powers[N - 1 - i] for i in range(N)])
    O_R = np.vstack([powers[N - 1 - i] for i in range(N)])
    D_N = np.kron(np.eye(N), D)
    Lt = [np.zeros((n, m))] + [powers[t - 1] @ B for t in range(1, N)]
    Ht = [C @ blk for blk in Lt]
    H = _block_hankel(Ht, N, p, m)
    L = _block_hankel(Lt, N, n, m)

    DD = symmetrize(D_N @ D_N.T)
    noise_info = symmetrize(np.eye(N * m) + H.T @ np.linalg.solve(DD, H))
    M11 = symmetrize(DD + H @ H.T)
    X = symmetrize(L @ np.linalg.solve(noise_info, L.T))
    J = O_R - L @ H.T @ np.linalg.solve(M11, O)
    Omega_N = symmetrize(O.T @ np.linalg.solve(M11, O))
    x1 = lambda_max(X)
    phi_tilde = np.inf if x1 <= 0 else 1.0 / x1
    _freeze(A_N, R, O, O_R, D_N, H, L, noise_info, M11, X, J, Omega_N)
    return NBlockSystem(N, n, m, p, A_N, R, O, O_R, D_N, H, L, noise_info, M11,
                        X, J, Omega_N, float(phi_tilde))


def krein_gramian(sys, theta):
    """
    Krein Gramian of the stacked observation noise and the Schur complement
    of its ``(1, 1)`` block.

    ``K = [[D D^T, 0], [0, -Theta^{-1}]] + [H; L][H; L]^T``
    ``S = -Theta^{-1} + L (I + H^T (D D^T)^{-1} H)^{-1} L^T``

    Theta must be strictly positive here.
    """
    d = sys.theta_diagonal(theta)
    if np.any(d <= 0):
        raise DomainError("krein_gramian requires strictly positive theta")
    Tinv = np.diag(1.0 / d)
    HL = np.vstack([sys.H, sys.L])
    Np = sys.N * sys.p
    K = HL @ HL.T
    K[:Np, :Np] += sys.D @ sys.D.T
    K[Np:, Np:] -= Tinv
    S = symmetrize(-Tinv + sys.X)
    return symmetrize(K), S


def _scaled_complement(sys, d):
    # I - Theta^{1/2} X Theta^{1/2}; S^{-1} = -Theta^{1/2} (this)^{-1} Theta^{1/2}
    s = np.sqrt(d)
    return symmetrize(np.eye(d.size) - (s[:, None] * sys.X) * s[None, :]), s


@dataclass(frozen=True)
class DistortedGramians:
    Omega: np.ndarray
    W: np.ndarray
    Q: np.ndarray

    @property
    def omega_min_eig(self):
        return lambda_min(self.Omega)

    @property
    def positive_definite(self):
        return lambda_min(self.Omega) > 0 and lambda_min(self.W) > 0


def _check_below_phi_tilde(sys, d):
    if d.max(initial=0.0) >= sys.phi_tilde:
        raise DomainError(
            f"max theta = {d.max():.6g} is not below phi_tilde = {sys.phi_tilde:.6g}")


def schur_inverse(sys, theta):
    """``S_Theta^{-1}``; valid for ``0 <= Theta < phi_tilde I`` including zeros."""
    d = sys.theta_diagonal(theta)
    _check_below_phi_tilde(sys, d)
    Z, s = _scaled_complement(sys, d)
    try:
        cf = sla.cho_factor(Z, lower=True)
    except np.linalg.LinAlgError:
        raise DomainError("I - Theta^{1/2} X Theta^{1/2} is not positive definite") from None
    return symmetrize(-(s[:, None] * sla.cho_solve(cf, np.diag(s)))), d


def distorted_gramians(sys, theta):
    """
    Distorted Gramians of the N-block model.

    ``Q = [I + H^T (D D^T)^{-1} H - L^T Theta L]^{-1}``,
    ``Omega = Omega_N + J^T S^{-1} J`` and ``W = R Q R^T``.

    ``theta`` may be a :class:`ThetaBlock`, a scalar, or a vector of length
    ``N`` or ``N n``; raw scalars and vectors may contain zeros, so
    ``theta = 0`` returns the undistorted Gramians.

    Raises
    ------
    DomainError
        Unless ``Theta < phi_tilde I``.
    """
    Sinv, d = schur_inverse(sys, theta)
    Omega = symmetrize(sys.Omega_N + sys.J.T @ Sinv @ sys.J)
    Qinv = symmetrize(sys.noise_info - sys.L.T @ (d[:, None] * sys.L))
    try:
        cf = sla.cho_factor(Qinv, lower=True)
    except np.linalg.LinAlgError:
        raise DomainError("Q_Theta is not positive definite") from None
    Q = symmetrize(sla.cho_solve(cf, np.eye(Qinv.shape[0])))
    W = symmetrize(sys.R @ Q @ sys.R.T)
    return DistortedGramians(Omega, W, Q)


def _gains_direct(sys, theta):
    K, _ = krein_gramian(sys, theta)
    HL = np.vstack([sys.H, sys.L])
    cond = np.linalg.cond(K)
    if not np.isfinite(cond) or cond > 1.0 / np.finfo(float).eps:
        raise NumericError(f"Krein Gramian is singular (condition number {cond:.3e})")
    GG = sla.solve(K, HL, assume_a="sym").T
    Np = sys.N * sys.p
    return GG[:, :Np], GG[:, Np:]


def nblock_gains(sys, theta):
    """
    ``[G, G^R] = [H^T, L^T] K_Theta^{-1}`` and the closed-loop matrix
    ``alpha = A^N - R (G O + G^R O^R)``.

    Below ``phi_tilde`` the inverse is taken blockwise through ``S_Theta^{-1}``,
    which also covers ``Theta = 0``; above it ``K_Theta`` is solved directly.
    """
    d = sys.theta_diagonal(theta)
    if d.max(initial=0.0) < sys.phi_tilde:
        Sinv, _ = schur_inverse(sys, d)
        HtMinv = np.linalg.solve(sys.M11, sys.H).T
        E = sys.L.T - HtMinv @ sys.H @ sys.L.T
        G = HtMinv - E @ Sinv @ sys.L @ HtMinv
        G_R = E @ Sinv
    else:
        G, G_R = _gains_direct(sys, d)
    alpha = sys.A_N - sys.R @ (G @ sys.O + G_R @ sys.O_R)
    return G, G_R, alpha


def nblock_map(sys, P, theta):
    """
    One step of the downsampled recursion
    ``alpha [P^{-1} + Omega_Theta]^{-1} alpha^T + W_Theta``.
    """
    gram = distorted_gramians(sys, theta)
    _, _, alpha = nblock_gains(sys, theta)
    try:
        inner = information_update(P, gram.Omega)
    except BreakdownError:
        raise DomainError("P^{-1} + Omega_Theta is not positive definite") from None
    return symmetrize(alpha @ inner @ alpha.T + gram.W)


def omega_min_eig(sys, phi):
    """``lambda_min(Omega_{phi I})``."""
    return distorted_gramians(sys, phi).omega_min_eig


def find_phi(sys, definiteness_tol=None, pullback=PHI_PULLBACK, rtol=PHI_RTOL):
    """
    Largest ``phi <= phi_tilde (1 - pullback)`` with
    ``lambda_min(Omega_{phi I}) > definiteness_tol``.

    ``lambda_min(Omega_{phi I})`` is nonincreasing in ``phi``, so bisection on
    the crossing is valid. The returned point sits on the definite side.
    """
    if definiteness_tol is None:
        definiteness_tol = 1e-12 * lambda_max(sys.Omega_N)
    if not lambda_min(sys.Omega_N) > definiteness_tol:
        raise CertificationError("Omega_N is not positive definite; is N >= n?")
    hi = sys.phi_tilde * (1.0 - pullback)
    if not np.isfinite(hi):
        raise CertificationError("phi_tilde is unbounded (L_N = 0); need N >= 2")
    if omega_min_eig(sys, hi) > definiteness_tol:
        return float(hi)
    lo = 0.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if omega_min_eig(sys, mid) > definiteness_tol:
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        raise CertificationError("no positive phi keeps Omega_{phi I} definite")
    return float(lo)
