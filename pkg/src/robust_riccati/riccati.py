"""
Riccati mappings and the robust filter recursion.

Three covariance maps share one code path:

* risk-neutral ``r(P) = A [P^{-1} + C^T (DD^T)^{-1} C]^{-1} A^T + BB^T``
* risk-sensitive ``r_theta(P)``, the same with ``- theta I`` inside the bracket
* robust ``r_c(P) = r_theta(P)`` with ``theta`` re-solved from ``gamma(theta, P) = c``
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .csvio import write_csv
from .exceptions import ContractError, DomainError, StructuralError
from .gamma import RiskParameter, solve_theta
from .psd import (eigvals_desc, information_update, symmetrize,
                  thompson_distance)

DIST_TOL = 1e-10
MAX_STEPS = 10_000


def _measurement_information(model):
    C = model.C
    return symmetrize(C.T @ np.linalg.solve(model.DDt, C))


def _theta_value(theta):
    if theta is None:
        return 0.0
    if isinstance(theta, RiskParameter):
        return theta.theta
    return float(theta)


def rs_riccati_step(model, P, theta):
    """
    Risk-sensitive map ``A [P^{-1} + C^T (DD^T)^{-1} C - theta I]^{-1} A^T + BB^T``.

    Raises
    ------
    BreakdownError
        When the bracketed matrix is not positive definite.
    """
    theta = float(theta)
    if not np.isfinite(theta) or theta < 0:
        raise DomainError(f"theta must be nonnegative, got {theta!r}")
    info = _measurement_information(model)
    if theta:
        info = info - theta * np.eye(model.n)
    return symmetrize(model.A @ information_update(P, info) @ model.A.T + model.BBt)


def riccati_step(model, P):
    """Risk-neutral Riccati map (``theta = 0``)."""
    return rs_riccati_step(model, P, 0.0)


def robust_riccati_step(model, P, c, step=None):
    """
    One step of the distorted Riccati iteration.

    Returns
    -------
    P_next : ndarray
    theta : RiskParameter
        The parameter solved against ``P``.
    """
    theta = solve_theta(c, P, step=step)
    return rs_riccati_step(model, P, theta.theta), theta


def _tilted_covariance(P, theta):
    # (P^{-1} - theta I)^{-1}
    n = P.shape[0]
    return information_update(P, -theta * np.eye(n)) if theta else symmetrize(P)


def robust_gain(model, P, theta=None):
    """
    Filter gain and innovation covariance.

    ``R_nu = C (P^{-1} - theta I)^{-1} C^T + DD^T`` and
    ``K = A (P^{-1} - theta I)^{-1} C^T R_nu^{-1}``.

    Parameters
    ----------
    theta : RiskParameter, float or None
        ``None`` or ``0`` selects the ordinary Kalman predictor gain. A
        :class:`RiskParameter` must have been solved against this ``P``.
    """
    P = symmetrize(P)
    if isinstance(theta, RiskParameter) and not theta.matches(P):
        raise ContractError("risk parameter was solved against a different covariance")
    th = _theta_value(theta)
    lam1 = eigvals_desc(P)[0]
    if th < 0 or th * lam1 >= 1.0:
        raise ContractError(f"theta = {th:.6g} outside (0, 1/lambda_1(P)) "
                            f"with 1/lambda_1 = {1.0 / lam1:.6g}")
    Pt = _tilted_covariance(P, th)
    C = model.C
    Rnu = symmetrize(C @ Pt @ C.T + model.DDt)
    K = np.linalg.solve(Rnu, (model.A @ Pt @ C.T).T).T
    return K, Rnu


@dataclass
class StepRecord:
    step: int
    P: np.ndarray
    theta: Optional[RiskParameter]
    gain: np.ndarray
    innovation_cov: np.ndarray
    step_distance: Optional[float] = None
    xhat: Optional[np.ndarray] = None
    innovation: Optional[np.ndarray] = None

    @property
    def theta_value(self):
        return _theta_value(self.theta)


@dataclass
class FilterTrace:
    """Per-step record of a robust (or risk-neutral) covariance iteration."""
    c: float
    records: List[StepRecord] = field(default_factory=list)
    converged: bool = False
    converged_at: Optional[int] = None

    def __len__(self):
        return len(self.records)

    @property
    def covariances(self):
        return [r.P for r in self.records]

    @property
    def thetas(self):
        """Theta values indexed by the step of the covariance they were solved against."""
        return np.array([r.theta_value for r in self.records])

    @property
    def distances(self):
        return np.array([np.nan if r.step_distance is None else r.step_distance
                         for r in self.records])

    @property
    def final(self):
        return self.records[-1].P

    @property
    def verdict(self):
        if self.converged:
            return f"converged at step {self.converged_at}"
        return "max steps reached"

    def csv_rows(self):
        n = self.records[0].P.shape[0] if self.records else 0
        with_x = any(r.xhat is not None for r in self.records)
        header = ["step", "theta_index", "theta", "dT_step"]
        header += [f"eig{i + 1}" for i in range(n)]
        if with_x:
            header += [f"xhat{i + 1}" for i in range(n)]
        rows = []
        for r in self.records:
            row = [r.step, r.step - 1, r.theta_value, r.step_distance]
            row += list(eigvals_desc(r.P))
            if with_x:
                row += list(r.xhat) if r.xhat is not None else [None] * n
            rows.append(row)
        return header, rows

    def to_csv(self, target):
        """
        Columns: ``step``, ``theta_index`` (``step - 1``, the conventional
        subscript of the parameter solved against ``P_step``), ``theta``,
        ``dT_step``, eigenvalues of ``P`` in decreasing order and, when
        present, the state estimate.
        """
        header, rows = self.csv_rows()
        write_csv(target, header, rows)


def _record(model, t, P, c, prev=None):
    theta = solve_theta(c, P, step=t) if c > 0 else None
    K, Rnu = robust_gain(model, P, theta)
    dist = None if prev is None else thompson_distance(P, prev)
    return StepRecord(t, P, theta, K, Rnu, dist)


def _check_c(c):
    c = float(c)
    if not np.isfinite(c) or c < 0:
        raise DomainError(f"tolerance c must be nonnegative, got {c!r}")
    return c


def iterate_riccati(model, P0=None, c=0.0, max_steps=MAX_STEPS, dist_tol=DIST_TOL):
    """
    Iterate the robust map (``c > 0``) or the risk-neutral map (``c = 0``).

    Stops as soon as ``d_T(P_{t+1}, P_t) < dist_tol``.

    Returns
    -------
    FilterTrace
        ``records[t]`` holds ``P_t`` together with the parameter solved against it.
    """
    c = _check_c(c)
    P = symmetrize(model.P0 if P0 is None else P0)
    trace = FilterTrace(c)
    rec = _record(model, 0, P, c)
    trace.records.append(rec)
    for t in range(max_steps):
        P_next = rs_riccati_step(model, rec.P, rec.theta_value)
        rec = _record(model, t + 1, P_next, c, prev=rec.P)
        trace.records.append(rec)
        if rec.step_distance < dist_tol:
            trace.converged = True
            trace.converged_at = t + 1
            break
    return trace


def filter_step(model, xhat, P, c, y, step=0):
    """
    Advance the robust predictor by one observation.

    Returns
    -------
    xhat_next, P_next, record
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (model.p,):
        raise StructuralError(f"observation must have length {model.p}, got {y.shape}")
    xhat = np.asarray(xhat, dtype=float)
    c = _check_c(c)
    rec = _record(model, step, symmetrize(P), c)
    nu = y - model.C @ xhat
    x_next = model.A @ xhat + rec.gain @ nu
    P_next = rs_riccati_step(model, rec.P, rec.theta_value)
    rec.xhat = xhat
    rec.innovation = nu
    return x_next, P_next, rec


def run_filter(model, observations, c, x0=None, P0=None):
    """
    Run the robust filter over a ``(T, p)`` array of observations.

    Returns the ``(T + 1, n)`` one-step predictions ``xhat_0 .. xhat_T`` and the trace.
    """
    ys = np.asarray(observations, dtype=float)
    if ys.ndim == 1:
        ys = ys.reshape(-1, 1) if model.p == 1 else ys.reshape(1, -1)
    if ys.ndim != 2 or (ys.size and ys.shape[1] != model.p):
        raise StructuralError(f"observations must have {model.p} columns, got {ys.shape}")
    x = np.zeros(model.n) if x0 is None else np.asarray(x0, dtype=float)
    P = symmetrize(model.P0 if P0 is None else P0)
    trace = FilterTrace(float(c))
    estimates = [x]
    prev = None
    for t, y in enumerate(ys):
        x, P_next, rec = filter_step(model, x, P, c, y, step=t)
        if prev is not None:
            rec.step_distance = thompson_distance(rec.P, prev)
        trace.records.append(rec)
        estimates.append(x)
        prev, P = rec.P, P_next
    return np.array(estimates), trace


def simulate(model, steps, seed=None, noise=True):
    """
    Sample ``x_0 .. x_{steps-1}`` and ``y_0 .. y_{steps-1}`` from the nominal model.

    ``noise=False`` zeroes the process and observation noise (the initial
    state is still drawn), which leaves the deterministic recursion.
    """
    if steps < 0:
        raise DomainError("steps must be nonnegative")
    states, obs = simulate_many(model, steps, 1, seed=seed, noise=noise)
    return states[0], obs[0]


def simulate_many(model, steps, runs, seed=None, noise=True):
    """Vectorized Monte Carlo: arrays of shape ``(runs, steps, n)`` and ``(runs, steps, p)``."""
    rng = np.random.default_rng(seed)
    n, m, p = model.n, model.m, model.p
    q = model.D.shape[1]
    L0 = np.linalg.cholesky(model.P0)
    x = rng.standard_normal((runs, n)) @ L0.T
    states = np.empty((runs, steps, n))
    obs = np.empty((runs, steps, p))
    scale = 1.0 if noise else 0.0
    for t in range(steps):
        v = rng.standard_normal((runs, q)) * scale
        u = rng.standard_normal((runs, m)) * scale
        states[:, t] = x
        obs[:, t] = x @ model.C.T + v @ model.D.T
        x = x @ model.A.T + u @ model.B.T
    return states, obs
