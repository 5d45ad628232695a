"""Independent ground truth for computed paths.

An accelerated proximal-gradient solver minimizes the same objective at a
fixed parameter by a method with nothing in common with the path engines,
an optimality checker grades claimed minimizers, and the path verifier
samples a path densely and compares it against both.  A semi-explicit
pseudoinverse formula from earlier work is included as a diagnostic; it is
expected to fail on instances where several coordinates hit at once.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import least_squares_min_norm
from .model import (
    DEFAULT_TOL,
    ProblemInstance,
    SolutionPath,
    Tolerances,
    active_set,
    energy,
    equicorrelation_set,
    max_correlation,
    optimality_residual,
    subgradient,
)

THREADS_ENV_VAR = "LASSOPATH_THREADS"


@dataclass(frozen=True)
class OracleConfig:
    """Proximal-gradient solver settings.

    `step` is the reciprocal of a Lipschitz bound on the gradient; when
    None it is estimated per instance by power iteration (50 rounds, 1%
    safety margin).  obj_tol is relative to 1 + 0.5*||f||^2.
    """

    max_iters: int = 20_000
    obj_tol: float = 1e-9
    step: Optional[float] = None

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.obj_tol <= 0:
            raise ValueError("obj_tol must be strictly positive")
        if self.step is not None and self.step <= 0:
            raise ValueError("step must be strictly positive")


DEFAULT_ORACLE = OracleConfig()


class OracleError(RuntimeError):
    """Non-convergence of the oracle solver; carries the last objective."""

    def __init__(self, message, last_objective=None):
        super().__init__(message)
        self.last_objective = last_objective


def gradient_lipschitz_bound(inst: ProblemInstance, rounds: int = 50) -> float:
    """Spectral norm of A^T A by power iteration with a 1% safety factor."""
    rng = np.random.default_rng(0)
    v = rng.standard_normal(inst.n)
    v /= np.linalg.norm(v)
    lam = 1.0
    for _ in range(rounds):
        w = inst.A.T @ (inst.A @ v)
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return 1.0
        v = w / lam
    return 1.01 * lam


def _soft_threshold(x, kappa):
    return np.sign(x) * np.maximum(np.abs(x) - kappa, 0.0)


def fista_solve(
    inst: ProblemInstance,
    t: float,
    cfg: OracleConfig = DEFAULT_ORACLE,
    u0=None,
) -> np.ndarray:
    """Minimize the objective at fixed t > 0 by accelerated proximal
    gradient with soft-thresholding and a monotone restart.

    Stops once the prox-gradient fixed point is reached within a tolerance
    derived from cfg.obj_tol; raises OracleError if max_iters is exhausted
    first.  `u0` warm-starts the iteration.
    """
    if t <= 0:
        raise ValueError("the oracle solves fixed-parameter problems with t > 0")
    A, f = inst.A, inst.f
    if t >= max_correlation(inst):
        # zero is optimal at and above the largest correlation
        return np.zeros(inst.n)
    L = 1.0 / cfg.step if cfg.step is not None else gradient_lipschitz_bound(inst)
    tau = 1.0 / L
    scale = 1.0 + 0.5 * float(f @ f)
    # fixed-point tolerance sized so the objective gap is well below
    # obj_tol * scale (gap ~ L * ||x - x*||^2 near the solution)
    xtol = 0.1 * np.sqrt(cfg.obj_tol * scale / L)

    x = np.zeros(inst.n) if u0 is None else np.asarray(u0, dtype=float).copy()
    y = x.copy()
    theta = 1.0
    obj = energy(inst, t, x)
    for it in range(cfg.max_iters):
        grad = A.T @ (A @ y - f)
        x_new = _soft_threshold(y - tau * grad, tau * t)
        obj_new = energy(inst, t, x_new)
        if obj_new > obj:
            # restart the momentum from the last monotone iterate
            y = x.copy()
            theta = 1.0
            grad = A.T @ (A @ y - f)
            x_new = _soft_threshold(y - tau * grad, tau * t)
            obj_new = energy(inst, t, x_new)
        theta_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
        y = x_new + ((theta - 1.0) / theta_new) * (x_new - x)
        converged = np.abs(x_new - x).max(initial=0.0) <= xtol and it > 0
        x, theta, obj = x_new, theta_new, obj_new
        if converged:
            # accept only if a plain prox step moves no further
            v = _soft_threshold(x - tau * (A.T @ (A @ x - f)), tau * t)
            if np.abs(v - x).max(initial=0.0) <= xtol:
                return v
            y = x.copy()
            theta = 1.0
    raise OracleError(
        f"proximal gradient did not converge in {cfg.max_iters} iterations "
        f"(last objective {obj})",
        last_objective=obj,
    )


def kkt_check(inst: ProblemInstance, t: float, u, tol: Tolerances = DEFAULT_TOL) -> float:
    """Max optimality violation of u at parameter t (0 means optimal).

    For t > 0 this is how far the subgradient leaves the unit ball plus the
    worst sign mismatch on the support; at t = 0 it is the normalized
    normal-equation residual.
    """
    return optimality_residual(inst, t, u, tol)


def tibshirani_beta(
    inst: ProblemInstance, t: float, u_ref, tol: Tolerances = DEFAULT_TOL
) -> np.ndarray:
    """Semi-explicit pseudoinverse formula for a path point.

    Given a reference solution at t (which supplies the equicorrelation set
    and the subgradient), returns the vector supported on that set given by
    back-to-back pseudoinverse solves.  Valid when at most one coordinate
    hits or leaves at a time; the 3x4 sign fixture shows it failing.
    """
    if t <= 0:
        raise ValueError("the formula is defined for t > 0")
    u_ref = np.asarray(u_ref, dtype=float)
    E = equicorrelation_set(inst, t, u_ref, tol)
    beta = np.zeros(inst.n)
    if E.size == 0:
        return beta
    p = subgradient(inst, t, u_ref)
    AE = inst.A[:, E]
    inner = inst.f - least_squares_min_norm(AE.T, t * p[E], tol.rank_tol)
    beta[E] = least_squares_min_norm(AE, inner, tol.rank_tol)
    return beta


@dataclass(frozen=True)
class SampleCheck:
    t: float
    kkt_residual: float
    objective_gap: float


@dataclass(frozen=True)
class VerificationReport:
    """Per-sample optimality residuals and oracle objective gaps.

    passed is true iff every sample is within both thresholds; worst_t is
    the parameter of the worst sample relative to the thresholds.
    """

    passed: bool
    worst_t: float
    samples: tuple
    seed: int
    kkt_threshold: float
    gap_threshold: float

    def to_json_dict(self) -> dict:
        return {
            "pass": self.passed,
            "worst_t": self.worst_t,
            "samples": [
                {"t": s.t, "kkt_residual": s.kkt_residual, "objective_gap": s.objective_gap}
                for s in self.samples
            ],
            "seed": self.seed,
        }


def _terminal_residual(inst, path, tol):
    """Optimality violation of the terminal point of a completed path.

    Combines the normal-equation residual with an l1-minimality witness:
    the subgradient of the final segment must stay in the unit ball, agree
    in sign with the terminal support, and lie in the row space of the
    matrix.  Those three facts certify that no other least squares solution
    has smaller l1 norm.
    """
    u0 = path.kinks[-1].u
    res = optimality_residual(inst, 0.0, u0, tol)
    if len(path.kinks) < 2:
        return res
    p = path.kinks[-2].p  # constant along the final segment
    res = max(res, max(0.0, float(np.abs(p).max()) - 1.0))
    act = active_set(u0, tol)
    if act.size:
        res = max(res, float(np.abs(p[act] - np.sign(u0[act])).max()))
    w = least_squares_min_norm(inst.A.T, p, tol.rank_tol)
    rowspace_gap = np.abs(inst.A.T @ w - p).max(initial=0.0)
    res = max(res, float(rowspace_gap) / (1.0 + float(np.abs(p).max(initial=0.0))))
    return res


def _sample_parameters(path, n_samples, rng):
    ts = path.kink_ts
    t0 = ts[0]
    samples = list(ts)
    samples.extend(0.5 * (ts[1:] + ts[:-1]))
    fill = n_samples - len(samples)
    if fill > 0 and t0 > 0:
        if ts[-1] > 0:
            lo = ts[-1]  # truncated path: stay inside the covered range
        else:
            lo = max(t0 * 1e-6, ts[ts > 0].min() * 1e-3)
        if lo < t0:
            draws = np.exp(rng.uniform(np.log(lo), np.log(t0), size=fill))
            samples.extend(draws)
    return sorted(set(float(t) for t in samples), reverse=True)


def verify_path(
    inst: ProblemInstance,
    path: SolutionPath,
    n_samples: int = 100,
    tol: Tolerances = DEFAULT_TOL,
    kkt_threshold: Optional[float] = None,
    gap_tol: float = 1e-6,
    oracle_cfg: Optional[OracleConfig] = None,
    seed: int = 0,
) -> VerificationReport:
    """Sample a path and certify (or refute) its optimality.

    Samples every kink, every segment midpoint, and log-uniform random fill
    up to `n_samples`.  Each positive sample is graded by the optimality
    checker and its objective is compared against an independent
    fixed-parameter solve; the terminal point is graded by the normal
    equations plus an l1-minimality certificate.  Failures are reported,
    never raised.  Parallelism is capped by the LASSOPATH_THREADS
    environment variable; runs are deterministic for a fixed seed and
    thread count.
    """
    if path.instance.m != inst.m or path.instance.n != inst.n:
        raise ValueError("path and instance dimensions disagree")
    kkt_threshold = tol.kkt_tol if kkt_threshold is None else kkt_threshold
    scale = 1.0 + 0.5 * float(inst.f @ inst.f)
    gap_threshold = gap_tol * scale
    if oracle_cfg is None:
        oracle_cfg = OracleConfig(step=1.0 / gradient_lipschitz_bound(inst))
    elif oracle_cfg.step is None:
        oracle_cfg = OracleConfig(
            max_iters=oracle_cfg.max_iters,
            obj_tol=oracle_cfg.obj_tol,
            step=1.0 / gradient_lipschitz_bound(inst),
        )
    rng = np.random.default_rng(seed)
    ts = _sample_parameters(path, n_samples, rng)

    def check_one(t):
        u = path.evaluate(t)
        if t == 0.0:
            return SampleCheck(t=0.0, kkt_residual=_terminal_residual(inst, path, tol), objective_gap=0.0)
        residual = optimality_residual(inst, t, u, tol)
        try:
            u_oracle = fista_solve(inst, t, oracle_cfg, u0=u)
        except OracleError as exc:
            gap = float("inf") if exc.last_objective is None else abs(
                energy(inst, t, u) - exc.last_objective
            )
            return SampleCheck(t=t, kkt_residual=residual, objective_gap=gap)
        gap = energy(inst, t, u) - energy(inst, t, u_oracle)
        return SampleCheck(t=t, kkt_residual=residual, objective_gap=gap)

    workers = 1
    env = os.environ.get(THREADS_ENV_VAR)
    if env:
        try:
            workers = max(1, int(env))
        except ValueError:
            workers = 1
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(check_one, ts))
    else:
        samples = [check_one(t) for t in ts]

    def badness(s):
        return max(s.kkt_residual / kkt_threshold, abs(s.objective_gap) / gap_threshold)

    worst = max(samples, key=badness)
    passed = badness(worst) <= 1.0
    return VerificationReport(
        passed=passed,
        worst_t=worst.t,
        samples=tuple(samples),
        seed=seed,
        kkt_threshold=kkt_threshold,
        gap_threshold=gap_threshold,
    )
