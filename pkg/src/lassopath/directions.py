"""Direction subproblem at a kink of the solution path.

The set of directions that extend a partial path below a parameter value is
the solution set of a least squares problem with sign constraints on the
equicorrelated-but-inactive coordinates and zero constraints off the
equicorrelation set.  This module solves that problem with a Lawson-Hanson
style active-set method (in flipped variables the sign constraints become
nonnegativity), selects the unique minimal-l2-norm element of the solution
set, and certifies membership through the KKT system

    A^T A d - p + lambda + theta = 0,
    d = 0 off E,            theta = 0 on E,
    d_i p_i >= 0 on E \\ Act,  lambda = 0 off E \\ Act,
    lambda_i p_i <= 0 and lambda_i d_i = 0 on E \\ Act,

where E is the equicorrelation set, Act the active set, and p the
subgradient.  The multipliers have closed forms given d:
lambda = (p - A^T A d) on E \\ Act and theta = (p - A^T A d) off E.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import index_set, least_squares_min_norm
from .model import (
    DEFAULT_TOL,
    ProblemInstance,
    Tolerances,
    active_set,
    equicorrelation_set,
)


class DirectionSolverError(RuntimeError):
    """Active-set iteration cap exceeded; carries the best iterate found."""

    def __init__(self, message, best_d=None, residual=None):
        super().__init__(message)
        self.best_d = best_d
        self.residual = residual


@dataclass(frozen=True)
class DirectionProblem:
    """Data of the direction subproblem at a point (t, u) of the path.

    free:        active coordinates, unconstrained in the subproblem
    constrained: equicorrelated zero coordinates, sign-constrained
    signs:       required direction sign per constrained coordinate (+-1)
    target:      r(t)/t, the vector the image A d must approximate
    """

    A: np.ndarray
    target: np.ndarray
    free: np.ndarray
    constrained: np.ndarray
    signs: np.ndarray
    equi: np.ndarray

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def p(self) -> np.ndarray:
        """Subgradient at the anchor point, A^T target."""
        return self.A.T @ self.target

    @classmethod
    def at_point(
        cls, inst: ProblemInstance, t: float, u, tol: Tolerances = DEFAULT_TOL
    ) -> "DirectionProblem":
        if t <= 0:
            raise ValueError("direction problems are anchored at t > 0")
        u = np.asarray(u, dtype=float)
        r = inst.f - inst.A @ u
        target = r / t
        equi = equicorrelation_set(inst, t, u, tol)
        act = active_set(u, tol)
        free = np.intersect1d(act, equi)
        constrained = np.setdiff1d(equi, act)
        p = inst.A.T @ target
        signs = np.where(p[constrained] >= 0, 1.0, -1.0)
        return cls(
            A=inst.A,
            target=target,
            free=free,
            constrained=constrained,
            signs=signs,
            equi=equi,
        )


@dataclass(frozen=True)
class DirectionCertificate:
    """A direction together with multipliers witnessing its optimality."""

    d: np.ndarray
    lam: np.ndarray
    theta: np.ndarray
    is_min_norm: bool

    def objective(self, prob: DirectionProblem) -> float:
        res = prob.A @ self.d - prob.target
        return float(res @ res)


@dataclass(frozen=True)
class MembershipReport:
    """Outcome of checking a direction against the KKT system.

    `checks` maps each condition name to its max violation; `worst_index`
    is the coordinate of the largest per-index violation.
    """

    ok: bool
    max_violation: float
    worst_index: Optional[int]
    lam: np.ndarray
    theta: np.ndarray
    checks: dict


def _flipped_columns(prob: DirectionProblem) -> np.ndarray:
    """Column matrix of the flipped subproblem: free columns as-is, then
    sign-flipped constrained columns t. nonnegativity replaces the signs."""
    cols = [prob.A[:, prob.free]]
    if prob.constrained.size:
        cols.append(prob.A[:, prob.constrained] * prob.signs)
    return np.concatenate(cols, axis=1) if len(cols) > 1 else cols[0]


def _embed(prob: DirectionProblem, x: np.ndarray) -> np.ndarray:
    d = np.zeros(prob.n)
    k = prob.free.size
    d[prob.free] = x[:k]
    d[prob.constrained] = prob.signs * x[k:]
    return d


def _solve_on(C, b, mask, rank_tol):
    z = np.zeros(C.shape[1])
    cols = np.flatnonzero(mask)
    if cols.size:
        z[cols] = least_squares_min_norm(C[:, cols], b, rank_tol)
    return z


def _lawson_hanson(C, b, n_free, tol: Tolerances):
    """Least squares min ||Cx - b|| with x_j >= 0 for j >= n_free.

    Lawson-Hanson active-set iteration with the lowest eligible index as
    the entering rule, which is deterministic and avoids cycling.
    """
    k = C.shape[1]
    x = np.zeros(k)
    if k == 0:
        return x
    is_constrained = np.arange(k) >= n_free
    passive = ~is_constrained  # free variables stay passive forever
    gtol = tol.kkt_tol * (1.0 + np.abs(C.T @ b).max(initial=0.0))
    if passive.any():
        x = _solve_on(C, b, passive, tol.rank_tol)
    for _ in range(tol.max_iters):
        w = C.T @ (b - C @ x)
        eligible = np.flatnonzero(~passive & (w > gtol))
        if eligible.size == 0:
            return x
        passive[eligible[0]] = True
        for _ in range(tol.max_iters):
            z = _solve_on(C, b, passive, tol.rank_tol)
            bad = passive & is_constrained & (z <= 0.0)
            if not bad.any():
                x = z
                break
            idx = np.flatnonzero(bad)
            denom = x[idx] - z[idx]
            ratios = np.where(denom > 0.0, x[idx] / np.where(denom > 0.0, denom, 1.0), 0.0)
            alpha = max(0.0, float(ratios.min()))
            x = x + alpha * (z - x)
            blocked = idx[ratios <= alpha + 1e-12 * (1.0 + alpha)]
            x[blocked] = 0.0
            passive[blocked] = False
        else:
            break
    raise DirectionSolverError(
        "active-set iteration cap exceeded in the direction solve",
        best_d=x,
        residual=float(np.linalg.norm(C @ x - b)),
    )


def _multipliers(prob: DirectionProblem, d: np.ndarray):
    """Closed-form multipliers for a candidate direction."""
    slack = prob.p - prob.A.T @ (prob.A @ d)
    lam = np.zeros(prob.n)
    lam[prob.constrained] = slack[prob.constrained]
    theta = np.zeros(prob.n)
    off_equi = np.setdiff1d(np.arange(prob.n), prob.equi)
    theta[off_equi] = slack[off_equi]
    return lam, theta, slack


def _membership(prob: DirectionProblem, d: np.ndarray, tol: Tolerances) -> MembershipReport:
    lam, theta, slack = _multipliers(prob, d)
    p = prob.p
    scale = 1.0 + np.abs(p).max(initial=0.0) + np.abs(p - slack).max(initial=0.0)
    limit = tol.kkt_tol * scale

    # per-index violation of each condition, all >= 0
    checks = {}
    per_index = np.zeros(prob.n)
    off_equi = np.setdiff1d(np.arange(prob.n), prob.equi)

    v = np.abs(d[off_equi])
    checks["support"] = float(v.max(initial=0.0))
    np.maximum.at(per_index, off_equi, v)

    v = np.abs(slack[prob.free])
    checks["stationarity"] = float(v.max(initial=0.0))
    np.maximum.at(per_index, prob.free, v)

    c = prob.constrained
    v = np.maximum(0.0, -(d[c] * p[c]))
    checks["direction_sign"] = float(v.max(initial=0.0))
    np.maximum.at(per_index, c, v)

    v = np.maximum(0.0, lam[c] * p[c])
    checks["multiplier_sign"] = float(v.max(initial=0.0))
    np.maximum.at(per_index, c, v)

    v = np.abs(lam[c] * d[c])
    checks["complementarity"] = float(v.max(initial=0.0))
    np.maximum.at(per_index, c, v)

    max_violation = max(checks.values())
    worst = int(np.argmax(per_index)) if max_violation > 0 else None
    return MembershipReport(
        ok=max_violation <= limit,
        max_violation=max_violation,
        worst_index=worst,
        lam=lam,
        theta=theta,
        checks=checks,
    )


def direction_set_membership(
    inst: ProblemInstance, t: float, u, d, tol: Tolerances = DEFAULT_TOL
) -> MembershipReport:
    """Check whether d extends the path below (t, u), assuming u optimal at t.

    Reconstructs the multipliers from their closed forms and reports the
    violations of the KKT system, so a failing direction comes back with the
    offending coordinate.
    """
    prob = DirectionProblem.at_point(inst, t, u, tol)
    return _membership(prob, np.asarray(d, dtype=float), tol)


def _closed_form_candidates(prob: DirectionProblem, tol: Tolerances):
    """When at most one coordinate is equicorrelated but inactive, the
    direction is supported on the active set or on the whole equicorrelation
    set, with pseudoinverse closed form on either support."""
    seen = set()
    for S in (prob.free, prob.equi):
        key = tuple(S.tolist())
        if key in seen:
            continue
        seen.add(key)
        d = np.zeros(prob.n)
        if S.size:
            AS = prob.A[:, S]
            d[S] = least_squares_min_norm(AS.T @ AS, prob.p[S], tol.rank_tol)
        yield d


def solve_direction(
    prob: DirectionProblem, tol: Tolerances = DEFAULT_TOL
) -> DirectionCertificate:
    """Compute some element of the direction set with its KKT certificate.

    Parameters
    ----------
    prob : DirectionProblem
        Subproblem data; see `DirectionProblem.at_point`.
    tol : Tolerances
        kkt_tol bounds the multiplier sign tests, rank_tol the inner least
        squares solves, max_iters the active-set iterations.

    Returns
    -------
    DirectionCertificate
        A minimizer of ||A d - target||^2 over the constraint set, with
        multipliers satisfying the KKT system within tolerance.
    """
    if prob.constrained.size <= 1:
        for d in _closed_form_candidates(prob, tol):
            rep = _membership(prob, d, tol)
            if rep.ok:
                return DirectionCertificate(
                    d=d, lam=rep.lam, theta=rep.theta, is_min_norm=False
                )
    C = _flipped_columns(prob)
    x = _lawson_hanson(C, prob.target, prob.free.size, tol)
    d = _embed(prob, x)
    rep = _membership(prob, d, tol)
    if not rep.ok and rep.max_violation > 10 * tol.kkt_tol * (1.0 + np.abs(prob.p).max(initial=0.0)):
        raise DirectionSolverError(
            f"direction solve did not reach a KKT point "
            f"(violation {rep.max_violation:.3e} on index {rep.worst_index})",
            best_d=d,
            residual=rep.max_violation,
        )
    return DirectionCertificate(d=d, lam=rep.lam, theta=rep.theta, is_min_norm=False)


def min_norm_direction(
    prob: DirectionProblem, d_any, tol: Tolerances = DEFAULT_TOL
) -> DirectionCertificate:
    """Select the unique minimal-l2-norm element of the direction set.

    Every element of the direction set shares the same image A d, so the
    set is the intersection of an affine space with the sign constraints.
    Starting from the certified element `d_any`, a primal active-set
    iteration pins sign-constrained coordinates at zero, solves the
    equality-constrained least-norm subproblem on the rest, and moves along
    feasible segments until the pinned set is optimal.  The result does not
    depend on which certified element was supplied.

    Raises
    ------
    DirectionSolverError
        If the equality system is inconsistent (the supplied direction was
        not a certified member) or the iteration cap is hit.
    """
    d_any = np.asarray(d_any, dtype=float)
    k = prob.free.size + prob.constrained.size
    if k == 0:
        z = np.zeros(prob.n)
        rep = _membership(prob, z, tol)
        return DirectionCertificate(z, rep.lam, rep.theta, is_min_norm=True)

    M = _flipped_columns(prob)
    b0 = prob.A @ d_any
    is_constrained = np.arange(k) >= prob.free.size

    # flipped coordinates of the starting point; clip round-off negatives
    y = np.concatenate([d_any[prob.free], prob.signs * d_any[prob.constrained]])
    feas_eps = 1e-12 * (1.0 + np.abs(y).max(initial=0.0))
    if np.any(y[is_constrained] < -feas_eps):
        raise DirectionSolverError("supplied direction violates its sign constraints")
    y[is_constrained & (y < 0.0)] = 0.0
    if float(np.linalg.norm(M @ y - b0)) > tol.kkt_tol * (1.0 + np.linalg.norm(b0)):
        raise DirectionSolverError("equality system inconsistent with supplied direction")

    pinned = is_constrained & (y <= feas_eps)
    y[pinned] = 0.0
    no_drop: set = set()

    def _subproblem(mask):
        return _solve_on(M, b0, ~mask, tol.rank_tol)

    for _ in range(tol.max_iters):
        yhat = _subproblem(pinned)
        moving_down = is_constrained & ~pinned & (yhat < -feas_eps)
        if not moving_down.any():
            y = yhat
            neg = is_constrained & (y < 0.0)  # magnitude <= feas_eps here
            y[neg] = 0.0
            if not pinned.any():
                break
            # multipliers for the pinned bounds: eta_j = -M_j^T xi with
            # y_active = M_active^T xi; negative eta marks a bad pin
            act_cols = np.flatnonzero(~pinned)
            if act_cols.size:
                Ma = M[:, act_cols]
                xi = least_squares_min_norm(Ma @ Ma.T, b0, tol.rank_tol)
            else:
                xi = np.zeros(M.shape[0])
            eta = -(M[:, pinned].T @ xi)
            mtol = tol.kkt_tol * (1.0 + np.abs(y).max(initial=0.0))
            pinned_idx = np.flatnonzero(pinned)
            droppable = [
                int(j)
                for j, e in zip(pinned_idx, eta)
                if e < -mtol and int(j) not in no_drop
            ]
            if droppable:
                pinned[droppable[0]] = False
                continue
            # rigorous fallback: unpinning j must not allow a smaller norm
            improved = False
            norm_y = float(np.linalg.norm(y))
            for j in pinned_idx:
                trial = pinned.copy()
                trial[j] = False
                ytrial = _subproblem(trial)
                if float(np.linalg.norm(ytrial)) < norm_y * (1.0 - 1e-12):
                    pinned[j] = False
                    no_drop.discard(int(j))
                    improved = True
                    break
            if not improved:
                break
            continue
        # partial step toward the subproblem optimum, blocking at zero
        idx = np.flatnonzero(moving_down)
        denom = y[idx] - yhat[idx]
        ratios = y[idx] / denom
        alpha = min(1.0, max(0.0, float(ratios.min())))
        newly = idx[ratios <= alpha + 1e-12 * (1.0 + alpha)]
        y = y + alpha * (yhat - y)
        y[newly] = 0.0
        pinned[newly] = True
        if alpha <= 1e-15:
            no_drop.update(int(j) for j in newly)
        else:
            no_drop.clear()
    else:
        raise DirectionSolverError(
            "active-set iteration cap exceeded in the least-norm solve",
            best_d=_embed(prob, y),
            residual=float(np.linalg.norm(y)),
        )

    d = _embed(prob, y)
    rep = _membership(prob, d, tol)
    return DirectionCertificate(d=d, lam=rep.lam, theta=rep.theta, is_min_norm=True)
