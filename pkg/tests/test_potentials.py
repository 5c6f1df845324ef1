import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from fylab.errors import ConfigurationError, DomainError, UnsupportedOperation
from fylab.potentials import PSEUDOSPHERICAL_Q_MAX, Kind, Potential, phi, phi_grad, phi_hess

SMOOTH = [
    Potential("shannon"),
    Potential("gini"),
    Potential("semicircle"),
    Potential("probit"),
    Potential("tsallis", 0.5),
    Potential("tsallis", 1.5),
    Potential("tsallis", 2.0),
    Potential("tsallis", 3.0),
    Potential("renyi", 0.5),
    Potential("renyi", 1.5),
    Potential("renyi", 2.0),
    Potential("pseudospherical", 2.0),
    Potential("pseudospherical", 5.0),
]
ALL = SMOOTH + [Potential("hinge")]
ids = [p.name for p in ALL]


def test_shannon_center():
    assert phi(Potential("shannon"), 0.5) == pytest.approx(-math.log(2), abs=1e-12)


@pytest.mark.parametrize("p", ALL, ids=ids)
def test_endpoints_exact_zero(p):
    assert phi(p, 0.0) == 0.0
    assert phi(p, 1.0) == 0.0


def test_formula_examples():
    assert phi(Potential("gini"), 0.25) == pytest.approx(-0.1875, abs=1e-15)
    assert phi(Potential("tsallis", 2), 0.25) == pytest.approx(-0.375, abs=1e-15)
    assert phi_grad(Potential("gini"), 0.3) == pytest.approx(-0.4, abs=1e-15)
    assert phi_grad(Potential("shannon"), 0.5) == 0.0
    assert phi_grad(Potential("semicircle"), 0.5) == 0.0
    assert phi_hess(Potential("shannon"), 0.5) == pytest.approx(4.0)
    assert np.allclose(phi_hess(Potential("tsallis", 2), np.linspace(0.01, 0.99, 7)), 4.0)


def test_semicircle_hess_matches_finite_difference():
    p = Potential("semicircle")
    h = 1e-6
    fd = (phi_grad(p, 0.5 + h) - phi_grad(p, 0.5 - h)) / (2 * h)
    assert fd == pytest.approx(4.0, rel=1e-8)
    assert phi_hess(p, 0.5) == pytest.approx(4.0, rel=1e-14)


def test_probit_antiderivative_matches_quadrature():
    # oracle: direct quadrature of the inverse normal cdf from a tiny offset
    p = Potential("probit")
    for mu in (0.01, 0.1, 0.3, 0.5, 0.8):
        val, _ = integrate.quad(special.ndtri, 1e-12, mu, epsabs=1e-13, limit=200)
        assert phi(p, mu) == pytest.approx(val, abs=1e-8)
    # high-precision reference values
    assert phi(p, 0.1) == pytest.approx(-0.17549833193248680663, abs=1e-14)
    assert phi(p, 0.3) == pytest.approx(-0.34769261420007376313, abs=1e-14)


def test_hinge_subgradient_and_no_hessian():
    p = Potential("hinge")
    assert phi_grad(p, 0.2) == -1.0
    assert phi_grad(p, 0.7) == 1.0
    assert phi_grad(p, 0.5) == 0.0
    with pytest.raises(UnsupportedOperation):
        phi_hess(p, 0.3)
    with pytest.raises(UnsupportedOperation):
        p.hess_at_zero


@pytest.mark.parametrize(
    "kind,q",
    [("tsallis", 1.0), ("tsallis", -1.0), ("renyi", 2.5), ("renyi", 1.0), ("renyi", 0.0),
     ("pseudospherical", 1.0), ("pseudospherical", PSEUDOSPHERICAL_Q_MAX + 1), ("shannon", 2.0),
     ("tsallis", None), ("tsallis", math.nan), ("entropy", None)],
)
def test_invalid_parameters_rejected(kind, q):
    with pytest.raises(ConfigurationError):
        Potential(kind, q)


def test_domain_errors():
    p = Potential("shannon")
    with pytest.raises(DomainError):
        phi(p, 1.5)
    with pytest.raises(DomainError):
        phi_grad(p, 0.0)
    with pytest.raises(DomainError):
        phi_hess(p, 1.0)


def test_config_round_trip():
    p = Potential("tsallis", 1.5)
    assert Potential.from_config(p.to_config()) == p
    assert Potential.from_config({"kind": "Shannon"}).kind is Kind.SHANNON
    assert p.to_config() == {"kind": "tsallis", "q": 1.5}
    with pytest.raises(ConfigurationError):
        Potential.from_config({"kind": "gini", "extra": 1})


@pytest.mark.parametrize("p", SMOOTH, ids=[p.name for p in SMOOTH])
def test_grad_odd_symmetry(p):
    mu = np.linspace(1e-3, 1 - 1e-3, 1000)
    assert np.max(np.abs(phi_grad(p, mu) + phi_grad(p, 1 - mu))) <= 1e-10 * max(1.0, np.max(np.abs(phi_grad(p, mu))))


@pytest.mark.parametrize("p", SMOOTH, ids=[p.name for p in SMOOTH])
def test_derivatives_match_finite_differences(p):
    mu = np.concatenate([np.geomspace(1e-4, 0.5, 60), 1 - np.geomspace(1e-4, 0.49, 60)])
    h = 1e-5 * np.minimum(mu, 1 - mu)
    fd1 = (phi(p, mu + h) - phi(p, mu - h)) / (2 * h)
    g = phi_grad(p, mu)
    assert np.allclose(fd1, g, rtol=1e-6, atol=1e-9)
    fd2 = (phi_grad(p, mu + h) - phi_grad(p, mu - h)) / (2 * h)
    # where phi'' is tiny the difference quotient is limited by rounding of phi'
    noise = 8 * np.finfo(float).eps * np.abs(g) / h
    assert np.all(np.abs(fd2 - phi_hess(p, mu)) <= 1e-6 * np.abs(fd2) + noise)


@pytest.mark.parametrize("p", ALL, ids=ids)
def test_convex_symmetric_nonpositive(p):
    mu = np.linspace(0, 1, 201)
    v = phi(p, mu)
    assert np.all(v <= 1e-15)
    assert np.allclose(v, v[::-1], atol=1e-12)
    assert np.argmin(v) == 100
    a, b = np.meshgrid(mu, mu)
    assert np.all(phi(p, (a + b) / 2) <= (phi(p, a) + phi(p, b)) / 2 + 1e-12)


@pytest.mark.parametrize("p", SMOOTH, ids=[p.name for p in SMOOTH])
def test_hessian_positive_and_grad_increasing(p):
    mu = np.linspace(1e-6, 1 - 1e-6, 2001)
    assert np.all(phi_hess(p, mu) > 0)
    assert np.all(np.diff(phi_grad(p, mu)) > 0)


@pytest.mark.parametrize("p", SMOOTH, ids=[p.name for p in SMOOTH])
def test_limits_at_zero(p):
    g0 = p.grad_at_zero
    if math.isinf(g0):
        assert phi_grad(p, 1e-300) < -30
    else:
        assert phi_grad(p, 1e-14) == pytest.approx(g0, rel=1e-3, abs=1e-3)


@given(st.floats(0.05, 4.0).filter(lambda q: abs(q - 1) > 1e-3), st.floats(1e-6, 1 - 1e-6))
def test_tsallis_family_properties(q, mu):
    p = Potential("tsallis", q)
    assert phi(p, mu) == pytest.approx(phi(p, 1 - mu), abs=1e-12)
    assert phi(p, mu) <= 1e-15
    assert phi_hess(p, mu) > 0


@given(st.floats(0.05, 2.0).filter(lambda q: abs(q - 1) > 1e-3), st.floats(1e-6, 0.5))
def test_renyi_family_grad_sign(q, mu):
    p = Potential("renyi", q)
    assert phi_grad(p, mu) <= 0
