"""Built-in matrix/data pairs that exercise known path degeneracies, seeded
random instance generators, and end-to-end fixture checks for the CLI.

The three named instances come from the sparse-recovery literature:

* loris: 3x3 invertible matrix whose path is unique, yet the first
  single-support direction has a wrongly signed component, so the
  single-support update fails right at the start.
* tibshirani: 3x4 sign matrix where four correlations tie at once and the
  semi-explicit pseudoinverse formula produces a vector with a wrongly
  signed component.
* infinite-kinks: 2x4 matrix with three identical columns, where a bad
  direction choice rule yields kinks at every power of 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ProblemInstance

GAUSSIAN = "gaussian"
BERNOULLI = "bernoulli"
INSTANCE_KINDS = (GAUSSIAN, BERNOULLI)


def loris_instance() -> ProblemInstance:
    A = [[-3.0, 4.0, 4.0], [-5.0, 1.0, 4.0], [5.0, 1.0, -4.0]]
    f = [24.0, 17.0, -7.0]
    return ProblemInstance(A, f)


def tibshirani_instance() -> ProblemInstance:
    A = [[-1.0, 1.0, 1.0, 1.0], [1.0, -1.0, 1.0, 1.0], [1.0, 1.0, 1.0, -1.0]]
    f = [-1.0, -3.0, -1.0]
    return ProblemInstance(A, f)


def infinite_kinks_instance() -> ProblemInstance:
    A = [[1.0, 1.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]]
    f = [2.0, 1.0]
    return ProblemInstance(A, f)


def generate_instance(kind: str, m: int, n: int, seed: int) -> ProblemInstance:
    """Seeded random instance.

    gaussian: iid standard normal matrix and data.  bernoulli: iid random
    sign matrix with exact measurements of a dense random sign vector,
    which regularly produces tied correlations along the path.
    """
    rng = np.random.default_rng(seed)
    if kind == GAUSSIAN:
        return ProblemInstance(rng.standard_normal((m, n)), rng.standard_normal(m))
    if kind == BERNOULLI:
        A = rng.choice([-1.0, 1.0], size=(m, n))
        u_true = rng.choice([-1.0, 1.0], size=n)
        return ProblemInstance(A, A @ u_true)
    raise ValueError(f"unknown instance kind {kind!r}; expected one of {INSTANCE_KINDS}")


@dataclass(frozen=True)
class FixtureCheck:
    name: str
    ok: bool
    detail: str = ""


def _check(name, ok, detail=""):
    return FixtureCheck(name=name, ok=bool(ok), detail=detail)


def run_loris_fixture(n_samples: int = 200) -> list:
    from .homotopy import run_generalized, run_looping, run_standard
    from .model import REACHED_ZERO, SIGN_INCONSISTENCY
    from .oracle import verify_path

    inst = loris_instance()
    checks = []
    path = run_generalized(inst)
    ts = path.kink_ts
    checks.append(_check("start parameter equals 192", ts[0] == 192.0, f"t0={ts[0]}"))
    checks.append(
        _check(
            "second kink at 63",
            len(ts) > 1 and abs(ts[1] - 63.0) <= 1e-9,
            f"t1={ts[1] if len(ts) > 1 else None}",
        )
    )
    checks.append(
        _check(
            "generalized path reaches zero",
            path.termination.kind == REACHED_ZERO,
            path.termination.to_string(),
        )
    )
    report = verify_path(inst, path, n_samples=n_samples)
    checks.append(
        _check(
            f"generalized path verifies at {n_samples} samples",
            report.passed,
            f"worst_t={report.worst_t}",
        )
    )
    std = run_standard(inst)
    checks.append(
        _check(
            "single-support update reports a sign inconsistency at 192",
            std.termination.kind == SIGN_INCONSISTENCY
            and std.termination.t is not None
            and abs(std.termination.t - 192.0) <= 1e-9,
            std.termination.to_string(),
        )
    )
    loop = run_looping(inst)
    loop_ok = loop.termination.kind == REACHED_ZERO
    if loop_ok:
        loop_ok = verify_path(inst, loop, n_samples=100).passed
    checks.append(_check("looping variant completes and verifies", loop_ok))
    return checks


def run_tibshirani_fixture() -> list:
    from .homotopy import one_at_a_time_report, run_generalized
    from .model import REACHED_ZERO
    from .oracle import kkt_check, tibshirani_beta, verify_path

    inst = tibshirani_instance()
    checks = []
    u_star = np.array([0.0, 0.0, -1.0, 0.0])
    res = kkt_check(inst, 2.0, u_star)
    checks.append(_check("sparse solution is optimal at t=2", res <= 1e-12, f"residual={res}"))
    beta = tibshirani_beta(inst, 2.0, u_star)
    expected = np.array([-0.25, -0.25, -0.75, -0.25])
    checks.append(
        _check(
            "pseudoinverse formula value at t=2",
            np.abs(beta - expected).max() <= 1e-10,
            f"beta={beta.tolist()}",
        )
    )
    beta_res = kkt_check(inst, 2.0, beta)
    checks.append(
        _check(
            "pseudoinverse formula fails optimality (wrong sign)",
            beta_res >= 0.5,
            f"residual={beta_res}",
        )
    )
    path = run_generalized(inst)
    ok = path.termination.kind == REACHED_ZERO and verify_path(inst, path, n_samples=100).passed
    checks.append(_check("generalized path completes and verifies", ok))
    report = one_at_a_time_report(path)
    checks.append(
        _check(
            "one-at-a-time condition is violated on this path",
            not report.holds,
        )
    )
    return checks


def run_infinite_kinks_fixture() -> list:
    from .homotopy import run_generalized
    from .model import REACHED_ZERO
    from .oracle import verify_path

    inst = infinite_kinks_instance()
    checks = []
    path = run_generalized(inst)
    ts = path.kink_ts
    checks.append(
        _check(
            "exactly three kinks at 2, 1, 0",
            ts.shape == (3,) and np.abs(ts - np.array([2.0, 1.0, 0.0])).max() <= 1e-10,
            f"kinks={ts.tolist()}",
        )
    )
    u0 = path.kinks[-1].u
    expected = np.array([2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 1.0])
    checks.append(
        _check(
            "terminal solution is the balanced one",
            np.abs(u0 - expected).max() <= 1e-10,
            f"u(0)={u0.tolist()}",
        )
    )
    ok = path.termination.kind == REACHED_ZERO and verify_path(inst, path, n_samples=100).passed
    checks.append(_check("path completes and verifies", ok))
    return checks


def run_adversarial_fixture(max_kinks: int = 8) -> list:
    from .homotopy import adversarial_demo

    checks = []
    path = adversarial_demo(max_kinks)
    ts = path.kink_ts
    expected = 2.0 ** (1.0 - np.arange(max_kinks))
    checks.append(
        _check(
            "kinks halve at every step",
            np.abs(ts - expected).max() <= 1e-10,
            f"kinks={ts.tolist()}",
        )
    )
    ok = True
    for kink in path.kinks:
        if kink.t <= 1.0:
            u = kink.u
            if abs(u[:3].sum() - (2.0 - kink.t)) > 1e-10 or abs(u[3] - (1.0 - kink.t)) > 1e-10:
                ok = False
    checks.append(_check("kink solutions satisfy the optimality identities", ok))
    return checks


FIXTURES = {
    "loris": run_loris_fixture,
    "tibshirani": run_tibshirani_fixture,
    "infinite-kinks": run_infinite_kinks_fixture,
    "infinite-kinks-adversarial": run_adversarial_fixture,
}

FIXTURE_INSTANCES = {
    "loris": loris_instance,
    "tibshirani": tibshirani_instance,
    "infinite-kinks": infinite_kinks_instance,
}
