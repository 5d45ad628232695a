"""Path construction engines.

Three algorithms share the same skeleton: start at the largest parameter at
which zero is optimal, pick a direction at each kink, take the maximal step
that preserves optimality, repeat until the parameter reaches zero.

* generalized: direction = minimal-norm element of the full direction set,
  obtained from the sign-constrained least squares characterization.  Always
  terminates with a complete path.
* standard: direction from a single pseudoinverse solve on the
  equicorrelation set minus the coordinates that just left the support.
  Detects and reports sign inconsistencies instead of silently producing a
  non-optimal path.
* looping: tries pseudoinverse directions over every candidate support
  between the active set and the equicorrelation set until one passes the
  membership check.  Exponential in the gap size, hence the cap.

The maximal step has closed form: the next kink parameter is the largest of
the candidate event parameters (an active coefficient crossing zero, a
multiplier driving a boundary subgradient entry to the opposite sign, or an
off-equicorrelation correlation reaching the boundary), floored at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from .directions import (
    DirectionCertificate,
    DirectionProblem,
    DirectionSolverError,
    _membership,
    direction_set_membership,
    min_norm_direction,
    solve_direction,
)
from .linalg import least_squares_min_norm
from .model import (
    DEFAULT_TOL,
    ITERATION_CAP,
    REACHED_ZERO,
    SIGN_INCONSISTENCY,
    PathPoint,
    ProblemInstance,
    SolutionPath,
    Termination,
    Tolerances,
    active_set,
    equicorrelation_set,
    max_correlation,
    optimality_residual,
)

GENERALIZED = "generalized"
STANDARD = "standard"
LOOPING = "looping"
ALGORITHMS = (GENERALIZED, STANDARD, LOOPING)

#: event kinds for step-size bookkeeping
COEFFICIENT_HITS_ZERO = "coefficient_hits_zero"
MULTIPLIER_SIGN_FLIP = "multiplier_sign_flip"
CORRELATION_HITS_BOUNDARY = "correlation_hits_boundary"


class LoopCapExceeded(RuntimeError):
    """The candidate-support loop would exceed its configured cap."""


@dataclass(frozen=True)
class HomotopyConfig:
    algorithm: str = GENERALIZED
    tolerances: Tolerances = field(default_factory=Tolerances)
    record_midpoint_checks: bool = False
    #: largest admissible |E \ Act| for the looping algorithm (2^cap supports)
    loop_cap: int = 20

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.loop_cap < 0:
            raise ValueError("loop_cap must be nonnegative")


@dataclass(frozen=True)
class StepSizeBreakdown:
    """Candidate next-kink parameters by event class, and their maximum.

    Empty candidate classes contribute -inf; `s` is floored at zero, and
    `delta = t - s` is the actual step taken.
    """

    s_active: float
    s_equicorrelated: float
    s_inactive: float
    s: float
    delta: float
    triggering: list


def step_size(
    inst: ProblemInstance,
    t: float,
    u,
    cert: DirectionCertificate,
    tol: Tolerances = DEFAULT_TOL,
) -> StepSizeBreakdown:
    """Maximal valid step below t along a certified direction.

    Candidate parameters: nu_i = u_i/d_i + t where an active coefficient
    hits zero; t*|lambda_i|/(|lambda_i| + 2) where a boundary subgradient
    entry would cross to the opposite sign; and the parameters where an
    off-equicorrelation correlation reaches either boundary.
    """
    u = np.asarray(u, dtype=float)
    d = cert.d
    p = inst.A.T @ (inst.f - inst.A @ u) / t
    AtAd = inst.A.T @ (inst.A @ d)
    equi = equicorrelation_set(inst, t, u, tol)
    act = active_set(u, tol)
    constrained = np.setdiff1d(equi, act)
    inactive = np.setdiff1d(np.arange(inst.n), equi)
    events = []

    s_active = -math.inf
    moving = act[d[act] != 0.0]
    if moving.size:
        nu = u[moving] / d[moving] + t
        keep = nu < t
        if keep.any():
            s_active = float(nu[keep].max())
            for i, v in zip(moving[keep], nu[keep]):
                events.append((int(i), COEFFICIENT_HITS_ZERO, float(v)))

    s_equi = -math.inf
    if constrained.size:
        lam = np.abs(cert.lam[constrained])
        vals = t * lam / (lam + 2.0)
        s_equi = float(vals.max())
        for i, v in zip(constrained, vals):
            events.append((int(i), MULTIPLIER_SIGN_FLIP, float(v)))

    s_inactive = -math.inf
    if inactive.size:
        num = t * (p[inactive] - AtAd[inactive])
        for sign in (1.0, -1.0):
            den = sign - AtAd[inactive]
            mu = np.where(den != 0.0, num / np.where(den != 0.0, den, 1.0), 0.0)
            keep = mu < t
            if keep.any():
                s_inactive = max(s_inactive, float(mu[keep].max()))
                for i, v in zip(inactive[keep], mu[keep]):
                    events.append((int(i), CORRELATION_HITS_BOUNDARY, float(v)))

    s = max(s_active, s_equi, s_inactive, 0.0)
    trig_tol = 1e-12 * max(1.0, t)
    triggering = [(i, kind) for i, kind, v in events if v >= s - trig_tol and v > 0.0]
    # deduplicate while keeping deterministic order
    seen = set()
    triggering = [e for e in triggering if not (e in seen or seen.add(e))]
    return StepSizeBreakdown(
        s_active=s_active,
        s_equicorrelated=s_equi,
        s_inactive=s_inactive,
        s=s,
        delta=t - s,
        triggering=triggering,
    )


def _initial_state(inst: ProblemInstance, tol: Tolerances):
    t0 = max_correlation(inst)
    if t0 <= 0.0:
        kink = PathPoint.from_solution(inst, 0.0, np.zeros(inst.n), tol)
        return None, SolutionPath(
            instance=inst,
            kinks=[kink],
            termination=Termination(REACHED_ZERO),
            directions=[],
        )
    return t0, None


def _advance(inst, t, u, d, s, tol):
    """Exact step arithmetic to the next kink, snapping crossings to zero."""
    u_next = u + (t - s) * d
    u_next[np.abs(u_next) <= tol.act_tol] = 0.0
    return u_next


def _snap_parameter(s, t0, tol):
    return 0.0 if s <= tol.eq_tol * max(1.0, t0) else s


def _record_midpoint(records, inst, t_hi, t_lo, u_hi, u_lo, tol):
    if t_hi <= t_lo:
        return
    t_mid = 0.5 * (t_hi + t_lo)
    w = (t_mid - t_lo) / (t_hi - t_lo)
    u_mid = w * u_hi + (1.0 - w) * u_lo
    records.append((t_mid, optimality_residual(inst, t_mid, u_mid, tol)))


def run_generalized(
    inst: ProblemInstance, cfg: Optional[HomotopyConfig] = None
) -> SolutionPath:
    """Trace the whole path with the minimal-norm direction rule.

    The minimal-norm rule guarantees finitely many kinks for any input; the
    iteration cap only turns a floating-point stall into a diagnosable
    truncation instead of a hang.
    """
    cfg = cfg or HomotopyConfig(algorithm=GENERALIZED)
    tol = cfg.tolerances
    t0, trivial = _initial_state(inst, tol)
    if trivial is not None:
        return trivial
    t, u = t0, np.zeros(inst.n)
    kinks = [PathPoint.from_solution(inst, t, u, tol)]
    directions = []
    midpoints = [] if cfg.record_midpoint_checks else None
    termination = Termination(ITERATION_CAP)
    for _ in range(tol.max_iters):
        if t == 0.0:
            termination = Termination(REACHED_ZERO)
            break
        try:
            prob = DirectionProblem.at_point(inst, t, u, tol)
            cert = min_norm_direction(prob, solve_direction(prob, tol).d, tol)
        except DirectionSolverError as exc:
            raise DirectionSolverError(
                f"direction solve failed at kink t={t}: {exc}",
                best_d=exc.best_d,
                residual=exc.residual,
            ) from exc
        step = step_size(inst, t, u, cert, tol)
        if step.delta <= 0.0:
            raise DirectionSolverError(
                f"nonpositive step at t={t}; the direction certificate is unreliable"
            )
        s = _snap_parameter(step.s, t0, tol)
        u_next = _advance(inst, t, u, cert.d, s, tol)
        if midpoints is not None:
            _record_midpoint(midpoints, inst, t, s, u, u_next, tol)
        directions.append(cert.d)
        kinks.append(PathPoint.from_solution(inst, s, u_next, tol))
        t, u = s, u_next
    return SolutionPath(
        instance=inst,
        kinks=kinks,
        termination=termination,
        directions=directions,
        midpoint_residuals=midpoints,
    )


def _pseudoinverse_direction(inst, S, p, rank_tol):
    d = np.zeros(inst.n)
    if S.size:
        AS = inst.A[:, S]
        d[S] = least_squares_min_norm(AS.T @ AS, p[S], rank_tol)
    return d


def run_standard(
    inst: ProblemInstance, cfg: Optional[HomotopyConfig] = None
) -> SolutionPath:
    """Single-support homotopy: pseudoinverse direction on the
    equicorrelation set minus the coordinates that just left the support.

    When that educated guess produces a direction outside the direction set
    (a sign inconsistency), the run terminates with the offending index and
    parameter recorded instead of continuing along a non-optimal path.
    """
    cfg = cfg or HomotopyConfig(algorithm=STANDARD)
    tol = cfg.tolerances
    t0, trivial = _initial_state(inst, tol)
    if trivial is not None:
        return trivial
    t, u = t0, np.zeros(inst.n)
    kinks = [PathPoint.from_solution(inst, t, u, tol)]
    directions = []
    midpoints = [] if cfg.record_midpoint_checks else None
    prev_active = np.array([], dtype=int)
    termination = Termination(ITERATION_CAP)
    for _ in range(tol.max_iters):
        if t == 0.0:
            termination = Termination(REACHED_ZERO)
            break
        point = kinks[-1]
        leaving = np.setdiff1d(prev_active, point.active)
        S = np.setdiff1d(point.equi, leaving)
        d = _pseudoinverse_direction(inst, S, point.p, tol.rank_tol)
        prob = DirectionProblem.at_point(inst, t, u, tol)
        rep = _membership(prob, d, tol)
        if not rep.ok:
            termination = Termination(SIGN_INCONSISTENCY, index=rep.worst_index, t=t)
            break
        cert = DirectionCertificate(d=d, lam=rep.lam, theta=rep.theta, is_min_norm=False)
        step = step_size(inst, t, u, cert, tol)
        if step.delta <= 0.0:
            termination = Termination(SIGN_INCONSISTENCY, index=rep.worst_index, t=t)
            break
        s = _snap_parameter(step.s, t0, tol)
        u_next = _advance(inst, t, u, d, s, tol)
        if midpoints is not None:
            _record_midpoint(midpoints, inst, t, s, u, u_next, tol)
        directions.append(d)
        prev_active = point.active
        kinks.append(PathPoint.from_solution(inst, s, u_next, tol))
        t, u = s, u_next
    return SolutionPath(
        instance=inst,
        kinks=kinks,
        termination=termination,
        directions=directions,
        midpoint_residuals=midpoints,
    )


def run_looping(
    inst: ProblemInstance, cfg: Optional[HomotopyConfig] = None
) -> SolutionPath:
    """Homotopy with a loop over candidate supports at every kink.

    Candidates are all supports between the active set and the
    equicorrelation set, in deterministic order (by size, then
    lexicographic); the first whose pseudoinverse direction passes the
    membership check with a positive step is accepted.  Such a support
    always exists, but there are 2^|E \\ Act| candidates, hence the cap.
    """
    cfg = cfg or HomotopyConfig(algorithm=LOOPING)
    tol = cfg.tolerances
    t0, trivial = _initial_state(inst, tol)
    if trivial is not None:
        return trivial
    t, u = t0, np.zeros(inst.n)
    kinks = [PathPoint.from_solution(inst, t, u, tol)]
    directions = []
    midpoints = [] if cfg.record_midpoint_checks else None
    termination = Termination(ITERATION_CAP)
    for _ in range(tol.max_iters):
        if t == 0.0:
            termination = Termination(REACHED_ZERO)
            break
        point = kinks[-1]
        gap = np.setdiff1d(point.equi, point.active)
        if gap.size > cfg.loop_cap:
            raise LoopCapExceeded(
                f"|E \\ Act| = {gap.size} exceeds the loop cap {cfg.loop_cap} at "
                f"t={t}; use the generalized algorithm for this instance"
            )
        prob = DirectionProblem.at_point(inst, t, u, tol)
        accepted = None
        for size in range(gap.size + 1):
            for extra in combinations(gap.tolist(), size):
                S = np.union1d(point.active, np.array(extra, dtype=int))
                d = _pseudoinverse_direction(inst, S, point.p, tol.rank_tol)
                rep = _membership(prob, d, tol)
                if not rep.ok:
                    continue
                cert = DirectionCertificate(
                    d=d, lam=rep.lam, theta=rep.theta, is_min_norm=False
                )
                step = step_size(inst, t, u, cert, tol)
                if step.delta > 0.0:
                    accepted = (cert, step)
                    break
            if accepted:
                break
        if accepted is None:
            raise DirectionSolverError(
                f"no candidate support produced a valid direction at t={t}"
            )
        cert, step = accepted
        s = _snap_parameter(step.s, t0, tol)
        u_next = _advance(inst, t, u, cert.d, s, tol)
        if midpoints is not None:
            _record_midpoint(midpoints, inst, t, s, u, u_next, tol)
        directions.append(cert.d)
        kinks.append(PathPoint.from_solution(inst, s, u_next, tol))
        t, u = s, u_next
    return SolutionPath(
        instance=inst,
        kinks=kinks,
        termination=termination,
        directions=directions,
        midpoint_residuals=midpoints,
    )


def solve_path(inst: ProblemInstance, cfg: HomotopyConfig) -> SolutionPath:
    """Dispatch to the engine selected by cfg.algorithm."""
    runner = {GENERALIZED: run_generalized, STANDARD: run_standard, LOOPING: run_looping}
    return runner[cfg.algorithm](inst, cfg)


def adversarial_demo(max_kinks: int, tol: Tolerances = DEFAULT_TOL) -> SolutionPath:
    """Replay the choice rule that makes the meta approach kink forever.

    On the fixed 2x4 rank-one-block instance there are multiple permissible
    directions at every kink, and alternating between two of them halves the
    parameter at each step, so the kink sequence 2, 1, 1/2, 1/4, ... never
    reaches zero.  Every replayed direction is validated through the KKT
    membership check before it is used; the returned path is truncated to
    `max_kinks` kinks.
    """
    from .fixtures import infinite_kinks_instance

    if max_kinks < 1:
        raise ValueError("max_kinks must be at least 1")
    inst = infinite_kinks_instance()
    first = np.array([0.5, 0.5, 0.0, 0.0])
    alternating = (
        np.array([1.5, -1.0, 0.5, 1.0]),
        np.array([1.5, 0.5, -1.0, 1.0]),
    )
    t, u = 2.0, np.zeros(4)
    kinks = [PathPoint.from_solution(inst, t, u, tol)]
    directions = []
    step_index = 0
    while len(kinks) < max_kinks:
        d = first if step_index == 0 else alternating[(step_index - 1) % 2]
        rep = direction_set_membership(inst, t, u, d, tol)
        if not rep.ok:
            raise DirectionSolverError(
                f"replayed direction rejected at t={t} "
                f"(violation {rep.max_violation:.3e} on index {rep.worst_index})"
            )
        cert = DirectionCertificate(d=d, lam=rep.lam, theta=rep.theta, is_min_norm=False)
        step = step_size(inst, t, u, cert, tol)
        u = u + (t - step.s) * d
        u[np.abs(u) <= tol.act_tol] = 0.0
        t = step.s
        directions.append(d)
        kinks.append(PathPoint.from_solution(inst, t, u, tol))
        step_index += 1
    return SolutionPath(
        instance=inst,
        kinks=kinks,
        termination=Termination(ITERATION_CAP),
        directions=directions,
    )


@dataclass(frozen=True)
class KinkTransition:
    """Hitting and leaving coordinates between consecutive kinks."""

    index: int
    t: float
    hit: tuple
    left: tuple


@dataclass(frozen=True)
class OneAtATimeReport:
    """Whether at most one coordinate hits or leaves at every kink.

    The kink before the start is treated as having empty equicorrelation
    and active sets, so the first record's hitting set is the initial
    equicorrelation set.  Only kinks at positive parameters count toward
    the condition.
    """

    transitions: tuple
    holds: bool


def one_at_a_time_report(
    path: SolutionPath, tol: Tolerances = DEFAULT_TOL
) -> OneAtATimeReport:
    transitions = []
    holds = True
    prev_equi = np.array([], dtype=int)
    prev_active = np.array([], dtype=int)
    for j, kink in enumerate(path.kinks):
        hit = np.setdiff1d(kink.equi, prev_equi)
        left = np.setdiff1d(prev_active, kink.active)
        transitions.append(
            KinkTransition(
                index=j,
                t=kink.t,
                hit=tuple(int(i) for i in hit),
                left=tuple(int(i) for i in left),
            )
        )
        if kink.t > 0 and hit.size + left.size > 1:
            holds = False
        prev_equi, prev_active = kink.equi, kink.active
    return OneAtATimeReport(transitions=tuple(transitions), holds=holds)
