"""Nominal Gauss-Markov state-space model and its structural checks."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .exceptions import ModelValidationError, StructuralError
from .psd import PD_TOL, eigvals_desc, is_positive_definite, symmetrize

RANK_TOL = 1e-10


def _as_matrix(name, value):
    arr = np.array(value, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        # a bare list is read as a single row
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise StructuralError(f"{name} must be a 2-D array, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise StructuralError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StateSpaceModel:
    """
    ``x_{t+1} = A x_t + B u_t``, ``y_t = C x_t + D v_t`` with unit-covariance
    white noises and ``x_0 ~ N(0, P0)``.

    ``D`` may be ``p x p'`` with ``p' >= p``; only ``D D^T`` enters the filter.
    """
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    P0: np.ndarray = field(default=None)

    def __post_init__(self):
        for name in ("A", "B", "C", "D"):
            object.__setattr__(self, name, _as_matrix(name, getattr(self, name)))
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise StructuralError(f"A must be square, got {self.A.shape}")
        if self.P0 is None:
            P0 = np.eye(n)
        else:
            P0 = _as_matrix("P0", self.P0)
        P0 = symmetrize(P0)
        P0.setflags(write=False)
        object.__setattr__(self, "P0", P0)
        if self.B.shape[0] != n:
            raise StructuralError(f"B must have {n} rows, got {self.B.shape}")
        if self.C.shape[1] != n:
            raise StructuralError(f"C must have {n} columns, got {self.C.shape}")
        if self.D.shape[0] != self.C.shape[0]:
            raise StructuralError(
                f"D must have {self.C.shape[0]} rows, got {self.D.shape}")
        if self.D.shape[1] < self.D.shape[0]:
            raise StructuralError(
                f"D must have at least as many columns as rows, got {self.D.shape}")
        if self.P0.shape != (n, n):
            raise StructuralError(f"P0 must be {n}x{n}, got {self.P0.shape}")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.C.shape[0]

    @property
    def BBt(self):
        return symmetrize(self.B @ self.B.T)

    @property
    def DDt(self):
        return symmetrize(self.D @ self.D.T)

    def with_P0(self, P0):
        return StateSpaceModel(self.A, self.B, self.C, self.D, P0)

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in ("A", "B", "C", "D", "P0")}

    def fingerprint(self):
        """SHA-256 of the canonical JSON form, used for certificate provenance."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    @classmethod
    def from_dict(cls, data):
        missing = [k for k in ("A", "B", "C", "D") if k not in data]
        if missing:
            raise StructuralError(f"model is missing fields: {', '.join(missing)}")
        return cls(data["A"], data["B"], data["C"], data["D"], data.get("P0"))

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise StructuralError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise StructuralError(f"{path}: expected a JSON object")
        return cls.from_dict(data)


def example_model_path():
    return Path(str(resources.files("robust_riccati") / "data" / "example_model.json"))


def example_model():
    """The two-state example model shipped with the package."""
    return StateSpaceModel.from_json(example_model_path())


def rank_of_block_matrix(M, rtol=RANK_TOL):
    """Numerical rank: singular values above ``rtol * sigma_max``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def reachability_matrix(A, B, N):
    """``[B, AB, ..., A^{N-1} B]``."""
    blocks, Ak_B = [], np.asarray(B, float)
    for _ in range(N):
        blocks.append(Ak_B)
        Ak_B = A @ Ak_B
    return np.hstack(blocks)


def observability_matrix(A, C, N):
    """``[C; CA; ...; CA^{N-1}]`` in the usual top-to-bottom order."""
    blocks, C_Ak = [], np.asarray(C, float)
    for _ in range(N):
        blocks.append(C_Ak)
        C_Ak = C_Ak @ A
    return np.vstack(blocks)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    witness: str


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failed(self):
        return [c for c in self.checks if not c.passed]

    def __str__(self):
        lines = [f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.witness}"
                 for c in self.checks]
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _pd_check(name, X):
    w = eigvals_desc(X)
    return Check(name, bool(w[-1] > PD_TOL * max(1.0, w[0])),
                 f"lambda_min = {w[-1]:.6g}")


def validate_model(model):
    """
    Run every structural assumption on ``model``.

    Dimension mismatches are caught earlier, when the model is constructed,
    and raise :class:`StructuralError` rather than producing a failed check.
    """
    n = model.n
    checks = [
        _pd_check("BB^T positive definite", model.BBt),
        _pd_check("DD^T positive definite", model.DDt),
    ]
    r = rank_of_block_matrix(reachability_matrix(model.A, model.B, n))
    checks.append(Check("(A,B) reachable", r == n, f"rank = {r} of {n}"))
    r = rank_of_block_matrix(observability_matrix(model.A, model.C, n))
    checks.append(Check("(A,C) observable", r == n, f"rank = {r} of {n}"))
    checks.append(_pd_check("P0 positive definite", model.P0))
    return ValidationReport(tuple(checks))


def require_valid(model):
    """Raise :class:`ModelValidationError` listing the failed checks, if any."""
    report = validate_model(model)
    if not report.passed:
        names = "; ".join(f"{c.name} ({c.witness})" for c in report.failed())
        raise ModelValidationError(f"model validation failed: {names}")
    return report


__all__ = [
    "StateSpaceModel", "ValidationReport", "Check", "validate_model",
    "require_valid", "rank_of_block_matrix", "reachability_matrix",
    "observability_matrix", "example_model", "example_model_path",
    "is_positive_definite",
]
