"""One test per acceptance criterion, each with its runtime budget.

Every test prints a ``CRITERION n: PASS|FAIL`` line (also repeated in the
terminal summary). A criterion passes only if all of its checks pass and
the measured runtime is inside its budget.
"""
import time

import pytest

from conftest import ACCEPTANCE_LINES
from fylab.fenchel import make_loss
from fylab.verify import (
    PARITY_LOSSES,
    SELF_BOUNDING_LOSSES,
    CONSTANTS_LOSSES,
    TRACE_SUITE,
    Status,
    VerificationReport,
    check_c_phi_limits,
    check_conjugate_parity,
    check_crouzeix,
    check_phase,
    check_pilot_convergence,
    check_rho,
    check_self_bounding,
    check_constants_table,
    sgd_ensemble,
    trace_suite,
)

CATALOG = tuple(dict.fromkeys(CONSTANTS_LOSSES + PARITY_LOSSES + SELF_BOUNDING_LOSSES))


def timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


def verdict(number, title, rep, elapsed, budget, extra=""):
    ok = rep.ok and elapsed < budget
    bad = ", ".join(c.name for c in rep.failures[:6])
    parts = [f"CRITERION {number}: {'PASS' if ok else 'FAIL'} {title}",
             f"checks {rep.counts()['pass']} pass / {rep.counts()['fail']} fail / {rep.counts()['skip']} skip",
             f"{elapsed:.2f}s < {budget:g}s" if elapsed < budget else f"{elapsed:.2f}s OVER {budget:g}s"]
    if extra:
        parts.append(extra)
    if bad:
        parts.append(f"failing: {bad}")
    line = " | ".join(parts)
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert rep.ok, "\n" + "\n".join(f"{c.name}: measured={c.measured} expected={c.expected} {c.detail}"
                                    for c in rep.failures)
    assert elapsed < budget, f"runtime {elapsed:.2f}s exceeds {budget}s"


def test_criterion_1_table():
    rep, dt = timed(check_constants_table)
    verdict(1, "margin, smoothness and exponent table", rep, dt, 5)


def test_criterion_2_c_phi():
    rep, dt = timed(lambda: check_c_phi_limits(1e-4))
    verdict(2, "C_phi limits at eps_bar=1e-4", rep, dt, 5)


def test_criterion_3_parity_and_crouzeix():
    def body():
        rep = VerificationReport()
        for spec in (("shannon", None), ("gini", None), ("semicircle", None), ("probit", None), ("hinge", None)):
            rep.extend(check_conjugate_parity(make_loss(*spec)))
        for spec in CATALOG:
            rep.extend(check_crouzeix(make_loss(*spec)))
        return rep
    rep, dt = timed(body)
    worst = max(c.measured for c in rep.checks if c.status is Status.PASS and c.measured is not None)
    verdict(3, "closed-form parity and curvature identity", rep, dt, 5, f"worst residual {worst:.2e}")


def test_criterion_4_pilot():
    rep, dt = timed(check_pilot_convergence)
    verdict(4, "pilot convergence, Tsallis q=2", rep, dt, 10)


@pytest.fixture(scope="module")
def suite():
    return timed(trace_suite)


def test_criterion_5_trace_inequalities(suite):
    rep, dt = suite
    assert len(TRACE_SUITE) >= 12
    picked = VerificationReport([c for c in rep.checks if "hitting_time" not in c.name])
    runs = {c.name.split("/")[1] + "/" + c.name.split("/")[2] for c in picked.checks if c.name.startswith("trace/")}
    controls = picked.select("control/")
    assert len(runs) == len(TRACE_SUITE) and len(controls.checks) == 2 * len(TRACE_SUITE)
    verdict(5, f"trace inequalities on {len(runs)} GD runs plus negative controls", picked, dt, 60)


def test_criterion_6_hitting_times(suite):
    rep, dt = suite
    hits = VerificationReport([c for c in rep.checks if "hitting_time" in c.name])
    skipped = sorted({c.name.split("/")[1] for c in hits.checks if c.status is Status.SKIP})
    assert hits.counts()["pass"] > 0
    extra = f"no finite bound for: {', '.join(skipped)}" if skipped else ""
    verdict(6, "hitting time <= iteration bound + 1", hits, dt, 60, extra)


def test_criterion_7_phase():
    rep, dt = timed(check_phase)
    verdict(7, "stable phase for logistic at eta=16", rep, dt, 10, f"s={rep.checks[0].measured}")


def test_criterion_8_self_bounding():
    rep, dt = timed(check_self_bounding)
    verdict(8, "self-bounding dichotomy", rep, dt, 5)


def test_criterion_9_rho():
    def body():
        rep = VerificationReport()
        for spec in CATALOG:
            rep.extend(check_rho(make_loss(*spec)))
        return rep
    rep, dt = timed(body)
    assert any(c.name.endswith("below_log_sq") for c in rep.checks)
    verdict(9, f"rho properties on {len(CATALOG)} catalog losses", rep, dt, 5)


def test_criterion_10_sgd():
    (rep, log), dt = timed(lambda: sgd_ensemble(seeds=tuple(range(20))))
    c = log["constants"]
    extra = f"successes {rep['sgd/success_fraction'].measured}; logged constants " + ", ".join(
        f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in c.items())
    verdict(10, "SGD seed ensemble, Tsallis q=2", rep, dt, 300, extra)
