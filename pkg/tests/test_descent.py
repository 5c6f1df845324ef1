import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fylab.data import Dataset, SeparableDistribution, synth_separable
from fylab.descent import (
    TRACE_COLUMNS,
    Mode,
    RunConfig,
    default_record_every,
    gd_run,
    phase_detect,
    risk,
    risk_grad,
    run,
    sgd_bound,
    sgd_run,
    sharpness,
)
from fylab.errors import ConfigurationError, DivergenceError, UnsupportedOperation
from fylab.fenchel import analyze, make_loss

SHANNON = make_loss("shannon")
GINI = make_loss("gini")
TS2 = make_loss("tsallis", 2.0)


def fd_grad(l, d, w, h=1e-6):
    out = np.zeros_like(w)
    for j in range(w.size):
        e = np.zeros_like(w)
        e[j] = h
        out[j] = (risk(l, d, w + e) - risk(l, d, w - e)) / (2 * h)
    return out


def test_risk_examples(pilot):
    assert risk(SHANNON, pilot, [0, 0]) == pytest.approx(math.log(2))
    assert risk(GINI, pilot, [0, 0]) == 0.25
    assert risk(TS2, pilot, [0, 20]) == 0.0


def test_risk_grad_examples(pilot):
    g0 = risk_grad(SHANNON, pilot, [0.0, 0.0])
    assert np.allclose(g0, [0.25, -0.1], atol=1e-15)
    assert np.allclose(fd_grad(SHANNON, pilot, np.zeros(2)), g0, atol=1e-9)
    assert np.array_equal(risk_grad(TS2, pilot, [0.0, 20.0]), [0.0, 0.0])
    mirror = Dataset(np.array([[0.5, 0.3], [-0.5, 0.3]]), np.ones(2))
    assert risk_grad(SHANNON, mirror, [0.0, 0.0])[0] == pytest.approx(0.0, abs=1e-16)


@pytest.mark.parametrize("spec", [("shannon", None), ("gini", None), ("tsallis", 1.5), ("renyi", 2.0), ("probit", None)])
def test_gradient_check_random_points(spec, pilot):
    l = make_loss(*spec)
    rng = np.random.default_rng(0)
    for d in (pilot, synth_separable(0, 30, 3, 0.1)):
        for _ in range(10):
            w = rng.normal(scale=1.5, size=d.dim)
            fd = fd_grad(l, d, w)
            assert np.allclose(risk_grad(l, d, w), fd, rtol=1e-6, atol=1e-8)


def test_one_gd_step(pilot):
    tr = gd_run(RunConfig(SHANNON, pilot, 1.0, 1))
    assert np.allclose(tr.final_w, [-0.25, 0.1], atol=1e-15)
    with pytest.raises(ConfigurationError):
        RunConfig(SHANNON, pilot, 0.0, 1)


def test_sharpness_examples(pilot):
    zz = pilot.z
    oracle = np.linalg.eigvalsh(0.25 * zz.T @ zz / pilot.n).max()
    assert sharpness(SHANNON, pilot, [0, 0]) == pytest.approx(oracle, rel=1e-9)
    assert sharpness(TS2, pilot, [0, 50]) == 0.0
    u = np.array([0.6, 0.8])
    scales = np.array([0.5, 1.0, 0.9])
    rank1 = Dataset(scales[:, None] * u, np.ones(3))
    w = np.array([0.3, -0.1])
    curv = np.array([SHANNON.curvature(s * (u @ w)) for s in scales])
    assert sharpness(SHANNON, rank1, w) == pytest.approx(np.mean(curv * scales**2), rel=1e-9)
    with pytest.raises(UnsupportedOperation):
        sharpness(make_loss("hinge"), pilot, [0, 0])


def test_large_stepsize_tsallis_converges(pilot):
    tr = gd_run(RunConfig(TS2, pilot, 16.0, 10**4))
    assert tr["min_risk"][-1] <= 1e-8


def test_trace_structure_and_determinism(pilot, tmp_path):
    cfg = RunConfig(SHANNON, pilot, 4.0, 300, record_every=7, sharpness_every=3)
    a, b = gd_run(cfg), gd_run(cfg)
    assert a == b
    assert a["t"][-1] == 300 and a["t"][1] == 7
    assert np.all(np.diff(a["min_risk"]) <= 0)
    assert np.isnan(a["sharpness"][1]) and not np.isnan(a["sharpness"][0])
    path = a.save(tmp_path, "run")
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(TRACE_COLUMNS)
    assert lines[2].split(",")[8] == ""
    meta = json.loads((tmp_path / "run.meta.json").read_text())
    assert meta["config"]["eta"] == 4.0 and meta["certificate"]["gamma"] == pytest.approx(0.2)


def test_hitting_times_independent_of_thinning(pilot):
    full = gd_run(RunConfig(SHANNON, pilot, 4.0, 2000, record_every=1))
    thin = gd_run(RunConfig(SHANNON, pilot, 4.0, 2000, record_every=97))
    assert full.hitting_times == thin.hitting_times
    t = full["t"]
    for eps, hit in full.hitting_times.items():
        below = np.flatnonzero(full["risk"] <= eps)
        assert hit == (int(t[below[0]]) if below.size else None)


def test_cumulative_columns(pilot):
    tr = gd_run(RunConfig(GINI, pilot, 2.0, 50))
    assert np.allclose(np.cumsum(tr["g_potential"])[:-1], tr["cum_g"][1:])
    assert np.allclose(np.cumsum(tr["risk"])[:-1], tr.cum_risk[1:])
    assert tr["cum_g"][0] == 0


def test_divergence_aborts_with_partial_trace():
    d = Dataset(np.array([[1.0, 0.0]]), np.array([1.0]))
    cfg = RunConfig(SHANNON, d, 1e300, 10, init=(-1e140, 0.0))
    with pytest.raises(DivergenceError) as info:
        gd_run(cfg)
    assert info.value.trace is not None and info.value.trace.diverged


def test_default_record_every():
    assert default_record_every(10**4) == 1
    assert default_record_every(10**6) == 100


def test_config_validation(pilot):
    with pytest.raises(ConfigurationError):
        RunConfig(SHANNON, pilot, 1.0, 0)
    with pytest.raises(ConfigurationError):
        RunConfig(SHANNON, pilot, 1.0, 10, init=(0.0, 0.0, 0.0))
    with pytest.raises(ConfigurationError):
        RunConfig(SHANNON, pilot, 1.0, 10, mode=Mode.SGD)


def test_sgd_determinism_and_norm_bound():
    dist = SeparableDistribution(4, 0.2)
    cfg = RunConfig(TS2, dist, 4.0, 3000, mode=Mode.SGD, seed=5, record_every=10, holdout=500)
    a, b = sgd_run(cfg), sgd_run(cfg)
    assert a == b
    bound = (4 * 2 + 4.0) / 0.2
    assert np.all(a["w_norm"] <= bound)
    other = sgd_run(RunConfig(TS2, dist, 4.0, 3000, mode=Mode.SGD, seed=6, record_every=10, holdout=500))
    assert not np.array_equal(a.final_w, other.final_w)


def test_sgd_reaches_low_heldout_risk():
    dist = SeparableDistribution(5, 0.2)
    tr = run(RunConfig(TS2, dist, 4.0, 10**4, mode=Mode.SGD, seed=0, record_every=50, holdout=2000))
    assert tr["min_risk"][-1] <= 1e-2


def test_phase_detection_logistic(pilot):
    a = analyze(SHANNON)
    tr = gd_run(RunConfig(SHANNON, pilot, 16.0, 10**4))
    pr = phase_detect(tr, a, SHANNON, pilot, 16.0)
    assert pr.applicable and pr.s is not None
    assert pr.monotone_after_s and pr.all_correct_at_s and pr.stable_rate_ok


def test_phase_detection_degenerate_cases(pilot):
    pr = phase_detect(gd_run(RunConfig(TS2, pilot, 1.0, 10)), analyze(TS2), TS2, pilot, 1.0)
    assert not pr.applicable and "not applicable" in pr.note
    short = gd_run(RunConfig(SHANNON, pilot, 16.0, 3))
    pr = phase_detect(short, analyze(SHANNON), SHANNON, pilot, 16.0)
    assert pr.s is None and pr.note == "insufficient horizon"
    assert pr.monotone_after_s and pr.all_correct_at_s and pr.stable_rate_ok


def test_sgd_bound_constants():
    a = analyze(TS2, eps_bar=0.5)
    b = sgd_bound(a, TS2, 0.2, 4.0, 1e-2, 0.05)
    assert b.loss_cap == pytest.approx(TS2.value(-(8 + 4) / 0.2))
    assert b.t_concentration >= 8 * b.loss_cap * math.log(20) / 1e-2
    assert b.n_blocks > 0
    with pytest.raises(ConfigurationError):
        sgd_bound(analyze(SHANNON), SHANNON, 0.2, 4.0, 1e-2, 0.05)


@given(st.floats(0.05, 30.0), st.integers(1, 200))
def test_min_risk_nonincreasing_and_finite(eta, steps):
    d = synth_separable(1, 20, 2, 0.1)
    tr = gd_run(RunConfig(GINI, d, eta, steps))
    assert np.all(np.isfinite(tr["risk"]))
    assert np.all(np.diff(tr["min_risk"]) <= 0)


@given(st.floats(0.1, 16.0), st.sampled_from(["shannon", "gini", "tsallis-2"]))
def test_perceptron_and_norm_bounds_hold(eta, name):
    l = make_loss("tsallis", 2.0) if name == "tsallis-2" else make_loss(name)
    d = synth_separable(4, 25, 3, 0.15)
    tr = gd_run(RunConfig(l, d, eta, 200))
    gamma = tr.certificate.gamma
    drift = tr["alignment"]
    assert np.all(gamma * eta * tr["cum_g"] <= drift + 1e-9 * np.abs(drift) + 1e-12)
