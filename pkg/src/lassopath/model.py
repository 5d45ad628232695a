"""Problem state for l1-regularized least squares.

Holds the immutable matrix/data pair, the energy and subgradient maps, the
equicorrelation and active sets, kink points, and the piecewise-linear
solution path with interpolation-based evaluation and JSON serialization.

The path JSON stores kinks only (parameter and coefficients); residuals,
subgradients and index sets are recomputed on load so that the pair (t, u)
remains the single source of truth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .linalg import as_matrix, as_vector

#: Termination kinds of a path computation.
REACHED_ZERO = "reached_zero"
ITERATION_CAP = "iteration_cap"
SIGN_INCONSISTENCY = "sign_inconsistency"


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared across the solvers.

    eq_tol is relative to max(1, t) when testing equicorrelation membership;
    absolute comparisons break down as t approaches zero.  act_tol is an
    absolute support threshold: kink coefficients are built from exact step
    arithmetic, so true zeros stay zero and the threshold only guards
    accumulated round-off.
    """

    eq_tol: float = 1e-9
    act_tol: float = 1e-12
    kkt_tol: float = 1e-8
    rank_tol: float = 1e-12
    max_iters: int = 100_000

    def __post_init__(self):
        for name in ("eq_tol", "act_tol", "kkt_tol", "rank_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


DEFAULT_TOL = Tolerances()


class ProblemInstance:
    """Immutable matrix/data pair (A, f) defining the variational problem."""

    __slots__ = ("A", "f")

    def __init__(self, A, f):
        A = as_matrix(A)
        f = as_vector(f)
        if f.shape[0] != A.shape[0]:
            raise ValueError(
                f"data vector has dim {f.shape[0]}, matrix has {A.shape[0]} rows"
            )
        A.flags.writeable = False
        f.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "f", f)

    def __setattr__(self, name, value):
        raise AttributeError("ProblemInstance is immutable")

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def __repr__(self):
        return f"ProblemInstance(m={self.m}, n={self.n})"


def max_correlation(inst: ProblemInstance) -> float:
    """||A^T f||_inf, the smallest parameter at which u = 0 is optimal."""
    return float(np.abs(inst.A.T @ inst.f).max())


def energy(inst: ProblemInstance, t: float, u) -> float:
    """Objective value 0.5*||Au - f||^2 + t*||u||_1."""
    u = np.asarray(u, dtype=float)
    if u.shape != (inst.n,):
        raise ValueError(f"u has shape {u.shape}, expected ({inst.n},)")
    if t < 0:
        raise ValueError("t must be nonnegative")
    res = inst.A @ u - inst.f
    return 0.5 * float(res @ res) + t * float(np.abs(u).sum())


def subgradient(inst: ProblemInstance, t: float, u) -> np.ndarray:
    """The l1-subdifferential element (1/t) A^T (f - Au), defined for t > 0."""
    if t <= 0:
        raise ValueError("subgradient requires t > 0")
    u = np.asarray(u, dtype=float)
    if u.shape != (inst.n,):
        raise ValueError(f"u has shape {u.shape}, expected ({inst.n},)")
    return inst.A.T @ (inst.f - inst.A @ u) / t


def equicorrelation_set(
    inst: ProblemInstance, t: float, u, tol: Tolerances = DEFAULT_TOL
) -> np.ndarray:
    """Indices whose column correlation |A_i^T(Au - f)| attains t.

    Membership is tested within eq_tol * max(1, t).  For t = 0 every index
    belongs by convention, which is what the terminal least squares
    characterization requires.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return np.arange(inst.n)
    u = np.asarray(u, dtype=float)
    corr = np.abs(inst.A.T @ (inst.A @ u - inst.f))
    return np.flatnonzero(np.abs(corr - t) <= tol.eq_tol * max(1.0, t))


def active_set(u, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Support of u: indices with |u_i| above the act_tol threshold."""
    return np.flatnonzero(np.abs(np.asarray(u, dtype=float)) > tol.act_tol)


def optimality_residual(
    inst: ProblemInstance, t: float, u, tol: Tolerances = DEFAULT_TOL
) -> float:
    """Max violation of the optimality conditions of u at parameter t.

    For t > 0: how far the subgradient leaves the unit ball, plus the sign
    mismatch on active coordinates.  For t = 0: the normal-equation residual
    ||A^T(Au - f)||_inf, normalized by 1 + ||A^T f||_inf.
    """
    u = np.asarray(u, dtype=float)
    if t == 0:
        res = np.abs(inst.A.T @ (inst.A @ u - inst.f)).max() if inst.n else 0.0
        return float(res) / (1.0 + max_correlation(inst))
    p = subgradient(inst, t, u)
    worst = max(0.0, float(np.abs(p).max()) - 1.0)
    act = active_set(u, tol)
    if act.size:
        worst = max(worst, float(np.abs(p[act] - np.sign(u[act])).max()))
    return worst


@dataclass(frozen=True)
class Termination:
    """How a path computation ended; sign inconsistencies carry the index
    whose direction contradicted the subgradient and the parameter value."""

    kind: str
    index: Optional[int] = None
    t: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (REACHED_ZERO, ITERATION_CAP, SIGN_INCONSISTENCY):
            raise ValueError(f"unknown termination kind: {self.kind}")

    def to_string(self) -> str:
        if self.kind == SIGN_INCONSISTENCY:
            return f"{self.kind}:{self.index}:{self.t!r}"
        return self.kind

    @classmethod
    def from_string(cls, s: str) -> "Termination":
        parts = s.split(":")
        if parts[0] == SIGN_INCONSISTENCY:
            if len(parts) != 3:
                raise ValueError(f"malformed termination string: {s!r}")
            return cls(SIGN_INCONSISTENCY, index=int(parts[1]), t=float(parts[2]))
        if len(parts) != 1:
            raise ValueError(f"malformed termination string: {s!r}")
        return cls(parts[0])


@dataclass(frozen=True)
class PathPoint:
    """A kink of the solution path: parameter, solution, and derived state.

    The subgradient p is None at t = 0, where it is not defined; callers
    needing a terminal certificate use the previous kink's subgradient,
    which stays constant along the final segment.
    """

    t: float
    u: np.ndarray
    r: np.ndarray
    p: Optional[np.ndarray]
    equi: np.ndarray
    active: np.ndarray

    @classmethod
    def from_solution(
        cls, inst: ProblemInstance, t: float, u, tol: Tolerances = DEFAULT_TOL
    ) -> "PathPoint":
        u = np.array(u, dtype=float)
        r = inst.f - inst.A @ u
        p = inst.A.T @ r / t if t > 0 else None
        for arr in (u, r) + ((p,) if p is not None else ()):
            arr.flags.writeable = False
        return cls(
            t=float(t),
            u=u,
            r=r,
            p=p,
            equi=equicorrelation_set(inst, t, u, tol),
            active=active_set(u, tol),
        )


class EvalResult(NamedTuple):
    u: np.ndarray
    clamped: bool


class PathFormatError(ValueError):
    """Raised when a serialized path is structurally inconsistent."""


@dataclass
class SolutionPath:
    """Ordered kink sequence with strictly decreasing parameter values.

    Between kinks the path is linear; `evaluate` interpolates.  For
    parameters above the first kink the solution is zero.  Below the last
    kink (only reachable when the computation was truncated) evaluation
    clamps to the last kink's solution.
    """

    instance: ProblemInstance
    kinks: list
    termination: Termination
    #: per-segment directions as computed by the engine; None when loaded
    directions: Optional[list] = None
    #: optional (t, residual) samples recorded at segment midpoints
    midpoint_residuals: Optional[list] = None

    def __post_init__(self):
        if not self.kinks:
            raise ValueError("a path needs at least one kink")
        ts = self.kink_ts
        if np.any(np.diff(ts) >= 0):
            raise ValueError("kink parameters must be strictly decreasing")

    @property
    def t0(self) -> float:
        return self.kinks[0].t

    @property
    def kink_ts(self) -> np.ndarray:
        return np.array([k.t for k in self.kinks])

    def evaluate(self, t: float) -> np.ndarray:
        return eval_path(self, t).u

    def to_json_dict(self) -> dict:
        return {
            "m": self.instance.m,
            "n": self.instance.n,
            "t0": self.t0,
            "termination": self.termination.to_string(),
            "kinks": [{"t": k.t, "u": [float(x) for x in k.u]} for k in self.kinks],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())


def interpolate_kinks(ts, us, t: float) -> EvalResult:
    """Piecewise-linear evaluation over raw kink arrays.

    ts must be strictly decreasing; us holds the matching solutions as rows.
    Returns zero above the first kink and clamps below the last one (the
    clamp is only reachable on truncated paths).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    ts = np.asarray(ts, dtype=float)
    us = np.asarray(us, dtype=float)
    if t >= ts[0]:
        if t == ts[0]:
            return EvalResult(us[0].copy(), False)
        return EvalResult(np.zeros(us.shape[1]), False)
    if t <= ts[-1]:
        return EvalResult(us[-1].copy(), t < ts[-1])
    # strictly inside: find segment [t_k, t_{k-1}) containing t
    hi = int(np.argmax(ts <= t))
    if ts[hi] == t:
        return EvalResult(us[hi].copy(), False)
    w = (t - ts[hi]) / (ts[hi - 1] - ts[hi])
    return EvalResult((1.0 - w) * us[hi] + w * us[hi - 1], False)


def eval_path(path: SolutionPath, t: float) -> EvalResult:
    """Evaluate the piecewise-linear path at parameter t.

    Returns the zero vector for t >= t0 and linear interpolation between the
    bracketing kinks otherwise.  The `clamped` flag marks parameters below
    the last kink of a truncated path, where the last solution is returned.
    """
    return interpolate_kinks(
        path.kink_ts, np.stack([k.u for k in path.kinks]), t
    )


def path_from_json_dict(
    obj: dict, inst: ProblemInstance, tol: Tolerances = DEFAULT_TOL
) -> SolutionPath:
    """Rebuild a path from its JSON form, recomputing all derived state.

    Validation here is structural (dimensions, parameter ordering, the
    initial kink, the starting parameter): a structurally sound path whose
    solutions were tampered with still loads, and it is the verifier's job
    to refute it.
    """
    try:
        m, n = int(obj["m"]), int(obj["n"])
        t0 = float(obj["t0"])
        termination = Termination.from_string(obj["termination"])
        raw_kinks = obj["kinks"]
    except (KeyError, TypeError, ValueError) as exc:
        raise PathFormatError(f"malformed path object: {exc}") from exc
    if (m, n) != (inst.m, inst.n):
        raise PathFormatError(
            f"path is for a {m}x{n} instance, got {inst.m}x{inst.n}"
        )
    if not raw_kinks:
        raise PathFormatError("path has no kinks")
    expected_t0 = max_correlation(inst)
    if abs(t0 - expected_t0) > tol.eq_tol * max(1.0, expected_t0):
        raise PathFormatError(
            f"starting parameter {t0} does not match ||A^T f||_inf = {expected_t0}"
        )
    kinks = []
    for entry in raw_kinks:
        t = float(entry["t"])
        u = np.asarray(entry["u"], dtype=float)
        if u.shape != (n,):
            raise PathFormatError(f"kink solution has shape {u.shape}, expected ({n},)")
        kinks.append(PathPoint.from_solution(inst, t, u, tol))
    if kinks[0].t != t0:
        raise PathFormatError("first kink parameter must equal t0")
    if np.abs(kinks[0].u).max(initial=0.0) != 0.0:
        raise PathFormatError("first kink solution must be zero")
    ts = np.array([k.t for k in kinks])
    if np.any(np.diff(ts) >= 0):
        raise PathFormatError("kink parameters must be strictly decreasing")
    if termination.kind == REACHED_ZERO and kinks[-1].t != 0.0:
        raise PathFormatError("a completed path must end at t = 0")
    return SolutionPath(instance=inst, kinks=kinks, termination=termination)


def path_from_json(
    text: str, inst: ProblemInstance, tol: Tolerances = DEFAULT_TOL
) -> SolutionPath:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PathFormatError(f"invalid JSON: {exc}") from exc
    return path_from_json_dict(obj, inst, tol)
