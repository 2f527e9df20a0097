"""Command-line interface: ``robust-riccati <command> [options]``."""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import certify as cert
from .csvio import read_matrix_csv, write_csv
from .exceptions import (CertificationError, DomainError, ModelValidationError,
                         NumericError, StructuralError)
from .gamma import gamma
from .model import StateSpaceModel, example_model_path, require_valid, validate_model
from .nblock import build_nblock, find_phi, omega_min_eig
from .psd import eigvals_desc, is_positive_definite
from .riccati import DIST_TOL, MAX_STEPS, iterate_riccati, run_filter, simulate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID_MODEL = 3
EXIT_DOMAIN = 4
EXIT_CERTIFICATION = 5
EXIT_NONCONVERGENCE = 6

COMMANDS = ("validate", "simulate", "filter", "iterate", "certify", "verify",
            "sweep-omega", "sweep-gamma")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    model_path: Path
    c: Optional[float] = None
    N: int = 8
    q: Optional[int] = None
    steps: Optional[int] = None
    seed: int = 0
    trials: int = 5
    output_path: Optional[Path] = None
    p0: str = "identity"
    grid: Optional[str] = None
    qs: str = "10,20,35"
    observations: Optional[Path] = None
    trace_path: Optional[Path] = None
    dist_tol: float = DIST_TOL

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        for name in ("c", "dist_tol"):
            v = getattr(self, name)
            if v is not None and not np.isfinite(v):
                raise UsageError(f"--{name.replace('_', '-')} must be finite")
        if self.command == "filter" and self.observations is None:
            raise UsageError("filter needs --obs")
        if self.command in ("simulate",) and self.steps is None:
            raise UsageError("simulate needs --steps")


def _parse_p0(spec, n):
    if spec == "identity":
        return np.eye(n)
    if spec.startswith("scaled:"):
        try:
            a = float(spec.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad --p0 scale in {spec!r}") from None
        if not (np.isfinite(a) and a > 0):
            raise UsageError("--p0 scale must be positive")
        return a * np.eye(n)
    if spec.startswith("file:"):
        P0 = np.array(read_matrix_csv(spec.split(":", 1)[1]))
        if P0.shape != (n, n) or not is_positive_definite(P0):
            raise UsageError(f"--p0 file must hold a {n}x{n} positive definite matrix")
        return P0
    raise UsageError(f"--p0 must be identity, scaled:<a> or file:<path>, got {spec!r}")


def _parse_grid(spec, default):
    if spec is None:
        lo, hi, pts = default
    else:
        try:
            lo_s, hi_s, pts_s = spec.split(",")
            lo, hi, pts = float(lo_s), float(hi_s), int(pts_s)
        except ValueError:
            raise UsageError(f"--grid must be lo,hi,points; got {spec!r}") from None
    if not (np.isfinite(lo) and np.isfinite(hi)) or pts < 2 or hi <= lo:
        raise UsageError("--grid needs finite lo < hi and at least 2 points")
    return np.linspace(lo, hi, pts)


def _emit(out, header, rows, stdout):
    if out is None:
        write_csv(stdout, header, rows)
    else:
        write_csv(out, header, rows)


def _load_model(cfg):
    return StateSpaceModel.from_json(cfg.model_path)


def _cmd_validate(cfg, stdout):
    report = validate_model(_load_model(cfg))
    print(report, file=stdout)
    return EXIT_OK if report.passed else EXIT_INVALID_MODEL


def _cmd_simulate(model, cfg, stdout):
    states, obs = simulate(model, cfg.steps, seed=cfg.seed)
    header = ["t"] + [f"x{i + 1}" for i in range(model.n)] + [f"y{i + 1}" for i in range(model.p)]
    rows = [[t, *states[t], *obs[t]] for t in range(cfg.steps)]
    _emit(cfg.output_path, header, rows, stdout)
    return EXIT_OK


def _cmd_filter(model, cfg, stdout):
    ys = np.array(read_matrix_csv(cfg.observations), dtype=float)
    if ys.size == 0:
        ys = ys.reshape(0, model.p)
    if ys.ndim != 2 or ys.shape[1] != model.p:
        raise StructuralError(f"observation file must have {model.p} columns")
    c = 0.0 if cfg.c is None else cfg.c
    P0 = _parse_p0(cfg.p0, model.n)
    est, trace = run_filter(model, ys, c, P0=P0)
    header = ["t"] + [f"xhat{i + 1}" for i in range(model.n)]
    _emit(cfg.output_path, header, [[t, *x] for t, x in enumerate(est)], stdout)
    trace_path = cfg.trace_path
    if trace_path is None and cfg.output_path is not None:
        out = Path(cfg.output_path)
        trace_path = out.with_name(out.stem + "_trace" + (out.suffix or ".csv"))
    if trace_path is not None:
        trace.to_csv(trace_path)
    return EXIT_OK


def _cmd_iterate(model, cfg, stdout):
    c = 0.0 if cfg.c is None else cfg.c
    P0 = _parse_p0(cfg.p0, model.n)
    steps = MAX_STEPS if cfg.steps is None else cfg.steps
    trace = iterate_riccati(model, P0, c, max_steps=steps, dist_tol=cfg.dist_tol)
    if cfg.output_path is None:
        trace.to_csv(stdout)
    else:
        trace.to_csv(cfg.output_path)
    print(trace.verdict, file=sys.stderr)
    return EXIT_OK if trace.converged else EXIT_NONCONVERGENCE


def _cmd_certify(model, cfg, stdout):
    c = cert.compute_certificate(model, cfg.N, cfg.q, user_c=cfg.c)
    text = c.to_json()
    if cfg.output_path is not None:
        Path(cfg.output_path).write_text(text + "\n", encoding="utf-8")
    print(f"c_max = {c.c_max:.17g}", file=stdout)
    if c.verdict is not None:
        print(f"verdict for c = {c.user_c:g}: {c.verdict}", file=stdout)
    if not c.contraction_coefficient_at_phi < 1.0:
        return EXIT_CERTIFICATION
    return EXIT_OK


def _cmd_verify(model, cfg, stdout):
    c_cert = cert.compute_certificate(model, cfg.N, cfg.q)
    c = c_cert.c_max / 2 if cfg.c is None else cfg.c
    steps = MAX_STEPS if cfg.steps is None else cfg.steps
    rep = cert.verify_certificate_empirically(
        model, c_cert, c, trials=cfg.trials, seed=cfg.seed, max_steps=steps,
        dist_tol=cfg.dist_tol)
    print(rep.summary(), file=stdout)
    return EXIT_OK if rep.passed else EXIT_NONCONVERGENCE


def _cmd_sweep_omega(model, cfg, stdout):
    sys_ = build_nblock(model, cfg.N)
    grid = _parse_grid(cfg.grid, (0.0, 8e-3, 200))
    if grid[-1] >= sys_.phi_tilde:
        raise DomainError(f"grid must stay below phi_tilde = {sys_.phi_tilde:.6g}")
    rows = [[phi, omega_min_eig(sys_, phi)] for phi in grid]
    _emit(cfg.output_path, ["phi", "lambda_min_Omega"], rows, stdout)
    return EXIT_OK


def _cmd_sweep_gamma(model, cfg, stdout):
    try:
        qs = [int(s) for s in cfg.qs.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"--qs must be a comma-separated list of integers, got {cfg.qs!r}") from None
    if not qs or min(qs) < 0:
        raise UsageError("--qs needs nonnegative integers")
    ramp = cert.lower_bound_ramp(model, max(qs))
    if cfg.grid is None:
        phi_N = find_phi(build_nblock(model, cfg.N))
        default = (0.0, 2.0 * phi_N, 200)
    else:
        default = None
    grid = _parse_grid(cfg.grid, default)
    lam1 = max(eigvals_desc(ramp[q])[0] for q in qs)
    if grid[-1] * lam1 >= 1.0:
        raise DomainError(f"grid must stay below 1/lambda_1 = {1.0 / lam1:.6g}")
    rows = [[th, *(gamma(th, ramp[q]) for q in qs)] for th in grid]
    _emit(cfg.output_path, ["theta"] + [f"gamma_q{q}" for q in qs], rows, stdout)
    return EXIT_OK


_HANDLERS = {
    "simulate": _cmd_simulate,
    "filter": _cmd_filter,
    "iterate": _cmd_iterate,
    "certify": _cmd_certify,
    "verify": _cmd_verify,
    "sweep-omega": _cmd_sweep_omega,
    "sweep-gamma": _cmd_sweep_gamma,
}


def run(cfg, stdout=None, stderr=None):
    """Execute one command; returns the process exit status."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        if cfg.command == "validate":
            return _cmd_validate(cfg, stdout)
        model = _load_model(cfg)
        require_valid(model)
        return _HANDLERS[cfg.command](model, cfg, stdout)
    except UsageError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_USAGE
    except (ModelValidationError, StructuralError, FileNotFoundError) as exc:
        print(f"invalid model or input: {exc}", file=stderr)
        return EXIT_INVALID_MODEL
    except CertificationError as exc:
        print(f"certification failed: {exc}", file=stderr)
        return EXIT_CERTIFICATION
    except (DomainError, NumericError) as exc:
        print(f"numeric domain error: {exc}", file=stderr)
        return EXIT_DOMAIN


def build_parser():
    parser = argparse.ArgumentParser(
        prog="robust-riccati",
        description="Robust Kalman filter with time-varying risk parameter: "
                    "iteration, N-block certification and sweeps.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--model", type=Path, default=None,
                        help="model JSON (default: bundled two-state example)")
    parser.add_argument("--c", type=float, default=None, help="tolerance budget")
    parser.add_argument("--N", type=int, default=8, help="block length")
    parser.add_argument("--q", type=int, default=None, help="ramp length")
    parser.add_argument("--qs", default="10,20,35", help="ramp lengths for sweep-gamma")
    parser.add_argument("--steps", type=int, default=None)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--trials", type=int, default=5)
    parser.add_argument("--out", type=Path, default=None, help="output file (default stdout)")
    parser.add_argument("--p0", default="identity",
                        help="identity | scaled:<a> | file:<path>")
    parser.add_argument("--grid", default=None, help="lo,hi,points")
    parser.add_argument("--obs", type=Path, default=None, help="observation CSV for filter")
    parser.add_argument("--trace", type=Path, default=None, help="trace CSV for filter")
    parser.add_argument("--dist-tol", type=float, default=DIST_TOL)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(
            command=args.command,
            model_path=args.model if args.model is not None else example_model_path(),
            c=args.c, N=args.N, q=args.q, steps=args.steps, seed=args.seed,
            trials=args.trials, output_path=args.out, p0=args.p0, grid=args.grid,
            qs=args.qs, observations=args.obs, trace_path=args.trace,
            dist_tol=args.dist_tol)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
