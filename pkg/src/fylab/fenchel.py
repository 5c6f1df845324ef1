"""Fenchel-Young losses built from binary potentials, and their analysis.

The loss is ``loss(z) = phi*(-z)`` and its negative slope is the dual map
``g(z) = (phi')^{-1}(-z)``, a probability. Two engines evaluate the pair:

* ``CLOSED_FORM`` uses registered formulas (logistic, modified Huber, hinge,
  semi-circle, probit, Tsallis 2, Renyi 2).
* ``NUMERIC`` solves ``phi'(mu) = -z`` with a safeguarded Newton iteration in
  ``log(mu)`` and evaluates ``mu * (-z) - phi(mu)``.

Both engines use the symmetry identities ``loss(z) = loss(-z) - z`` and
``g(z) = 1 - g(-z)``, so only ``z >= 0`` (where ``mu <= 1/2``) is ever
solved for.

The analysis functions compute the separation margin, the rate exponent
``alpha`` and constant ``C_phi``, the Lipschitz constant of the loss, the
smoothness estimate, the ``rho`` rate function and self-bounding
diagnostics, and the iteration bounds that combine them.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import integrate, optimize, special

from .errors import (
    AnalysisError,
    BracketError,
    ConfigurationError,
    DomainError,
    UnsupportedOperation,
)
from .potentials import Kind, Potential

__all__ = [
    "Engine",
    "FyLoss",
    "make_loss",
    "loss",
    "g",
    "loss_curvature",
    "loss_inverse",
    "separation_margin",
    "probe_margin",
    "rho",
    "rate_integrand_exponent",
    "alpha_exponent",
    "alpha_profile",
    "c_phi",
    "c_phi_limit",
    "lipschitz_cg",
    "smoothness_estimate",
    "curvature_jump_at_margin",
    "self_bounding_probe",
    "SelfBoundingReport",
    "LossAnalysis",
    "analyze",
    "iteration_bound",
    "RHO_LAMBDAS",
]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_T_LOW = math.log(1e-300)
_T_HIGH = math.log(0.5)
RHO_LAMBDAS = tuple(10.0**k for k in range(7))


class Engine(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    NUMERIC = "numeric"


# ---------------------------------------------------------------------------
# closed forms: each maps a float array z to (loss, g)


def _shannon(z):
    return np.logaddexp(0.0, -z), special.expit(-z)


def _gini(z):
    val = np.where(z >= 1, 0.0, np.where(z >= -1, 0.25 * (1 - z) ** 2, -z))
    return val, np.clip(0.5 * (1 - z), 0.0, 1.0)


def _tsallis2(z):
    val = np.where(z >= 2, 0.0, np.where(z >= -2, 0.125 * (2 - z) ** 2, -z))
    return val, np.clip(0.25 * (2 - z), 0.0, 1.0)


def _hinge(z):
    val = np.maximum(np.maximum(0.0, 0.5 * (1 - z)), -z)
    # right derivative convention at the kinks z = -1 and z = 1
    return val, np.where(z >= 1, 0.0, np.where(z >= -1, 0.5, 1.0))


def _semicircle(z):
    r = np.hypot(z, 2.0)
    val = np.where(z >= 0, 2.0 / (np.abs(z) + r), 0.5 * (r - z))
    return val, val / r


def _probit_pos(a):
    # a >= 0; scaled complementary error function avoids underflow
    return np.exp(-0.5 * a * a) * (_INV_SQRT_2PI - 0.5 * a * special.erfcx(a / math.sqrt(2.0)))


def _probit(z):
    a = np.abs(z)
    pos = _probit_pos(a)
    return np.where(z >= 0, pos, pos - z), special.ndtr(-z)


def _renyi2(z):
    zc = np.clip(z, -2.0, 2.0)
    a = np.sqrt(2.0 - zc)
    b = np.sqrt(2.0 + zc)
    mu = a / (a + b)
    inner = -mu * zc + 2.0 * np.log(0.5 * (a + b))
    val = np.where(z >= 2, 0.0, np.where(z <= -2, -z, np.maximum(inner, 0.0)))
    return val, np.where(z >= 2, 0.0, np.where(z <= -2, 1.0, mu))


def _closed_form_for(p: Potential) -> Optional[Callable]:
    k = p.kind
    if k is Kind.SHANNON:
        return _shannon
    if k is Kind.GINI:
        return _gini
    if k is Kind.HINGE:
        return _hinge
    if k is Kind.SEMICIRCLE:
        return _semicircle
    if k is Kind.PROBIT:
        return _probit
    if k is Kind.TSALLIS and p.q == 2:
        return _tsallis2
    if k is Kind.RENYI and p.q == 2:
        return _renyi2
    return None


# ---------------------------------------------------------------------------
# numeric conjugate


def _dual_table(p: Potential, size: int = 4096):
    """Increasing ``z = -phi'(mu)`` on a log grid of mu in [1e-300, 1/2]."""
    t = np.linspace(_T_HIGH, _T_LOW, size)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        zs = -p._grad(np.exp(t))
    zs[0] = 0.0
    zs = np.maximum.accumulate(zs)
    return zs, t


def _solve_dual_nonneg(p: Potential, z: np.ndarray, margin: Optional[float], table) -> np.ndarray:
    """Return mu in [0, 1/2] with phi'(mu) = -z for an array of z >= 0.

    The table brackets each root between neighbouring grid points in
    ``log(mu)``; a safeguarded Newton iteration finishes the job.
    """
    mu = np.full(z.shape, 0.5)
    todo = z > 0
    if margin is not None:
        saturated = z >= margin
        mu[saturated] = 0.0
        todo &= ~saturated
    if not np.any(todo):
        return mu
    zz = z[todo]
    ztab, ttab = table
    beyond = zz > ztab[-1]
    idx = np.clip(np.searchsorted(ztab, zz, side="left"), 1, ztab.size - 1)
    hi = ttab[idx - 1]
    lo = ttab[idx]
    z0, z1 = ztab[idx - 1], ztab[idx]
    frac = np.where(z1 > z0, (zz - z0) / np.where(z1 > z0, z1 - z0, 1.0), 0.5)
    t = hi + np.clip(frac, 0.0, 1.0) * (lo - hi)
    active = ~beyond
    with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
        for it in range(200):
            m = np.exp(t)
            f = p._grad(m) + zz
            lo = np.where(f < 0, t, lo)
            hi = np.where(f >= 0, t, hi)
            newton = t - f / (p._hess(m) * m)
            ok = np.isfinite(newton) & (newton > lo) & (newton < hi)
            # a small Newton step is taken and ends the iteration: the next
            # correction would be below rounding by quadratic convergence
            settled = ok & (np.abs(newton - t) <= 1e-9 * np.maximum(1.0, np.abs(t)))
            # every sixth pass bisects unless Newton has settled; bounds the worst case
            bisect = ~ok | ((it % 6 == 5) & ~settled)
            cand = np.where(bisect, 0.5 * (lo + hi), newton)
            exact = f == 0
            done = exact | settled | (hi - lo <= 4e-16 * np.maximum(1.0, np.abs(lo)))
            t = np.where(active & ~exact, cand, t)
            active &= ~done
            if not np.any(active):
                break
    out = np.exp(t)
    out[beyond] = 0.0
    mu[todo] = out
    return mu


def _numeric_hinge(z):
    # conjugate of max{mu, 1 - mu} - 1 is a max over the vertices {0, 1/2, 1}
    cand = np.stack([np.zeros_like(z), 0.5 * (-z) + 0.5, -z])
    return cand.max(axis=0), _hinge(z)[1]


def _numeric_pair(p: Potential, z: np.ndarray, margin: Optional[float], table):
    if p.kind is Kind.HINGE:
        return _numeric_hinge(z)
    a = np.abs(z)
    mu = _solve_dual_nonneg(p, a, margin, table)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi_mu = np.where(mu > 0, p._value(np.where(mu > 0, mu, 0.5)), 0.0)
    pos = np.maximum(-mu * a - phi_mu, 0.0)
    val = np.where(z >= 0, pos, pos - z)
    gz = np.where(z >= 0, mu, 1.0 - mu)
    return val, gz


# ---------------------------------------------------------------------------
# loss object


@dataclass(frozen=True)
class FyLoss:
    """Margin loss ``phi*(-z)`` generated by a potential.

    ``engine`` defaults to the closed form when one is registered. The
    separation margin is computed once at construction.
    """

    potential: Potential
    engine: Optional[Engine] = None
    margin: Optional[float] = field(init=False, default=None)
    _table: Optional[tuple] = field(init=False, default=None, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.potential, Potential):
            raise ConfigurationError("FyLoss needs a Potential")
        engine = self.engine
        if engine is None:
            engine = Engine.CLOSED_FORM if self.has_closed_form else Engine.NUMERIC
        engine = Engine(engine)
        if engine is Engine.CLOSED_FORM and not self.has_closed_form:
            raise ConfigurationError(f"no closed form registered for {self.potential.name}")
        object.__setattr__(self, "engine", engine)
        m = -self.potential.grad_at_zero
        object.__setattr__(self, "margin", m if math.isfinite(m) else None)
        if engine is Engine.NUMERIC and self.potential.smooth:
            object.__setattr__(self, "_table", _dual_table(self.potential))

    @property
    def has_closed_form(self) -> bool:
        return _closed_form_for(self.potential) is not None

    @property
    def name(self) -> str:
        return self.potential.name

    @property
    def smooth(self) -> bool:
        return self.potential.smooth

    def pair(self, z):
        """Return ``(loss(z), g(z))`` as float arrays of the same shape."""
        z = np.asarray(z, dtype=float)
        if not np.all(np.isfinite(z)):
            raise DomainError("loss needs finite arguments")
        if self.engine is Engine.CLOSED_FORM:
            with np.errstate(over="ignore", under="ignore"):
                val, gz = _closed_form_for(self.potential)(z)
        else:
            val, gz = _numeric_pair(self.potential, z, self.margin, self._table)
        return np.asarray(val, dtype=float), np.asarray(gz, dtype=float)

    def value(self, z):
        return _scalarize(self.pair(z)[0])

    def dual(self, z):
        return _scalarize(self.pair(z)[1])

    def curvature(self, z):
        return _scalarize(self._curvature_from_dual(self.pair(z)[1]))

    def _curvature_from_dual(self, gz):
        if not self.smooth:
            raise UnsupportedOperation("hinge loss has no second derivative")
        gz = np.asarray(gz, dtype=float)
        interior = (gz > 0) & (gz < 1)
        safe = np.where(interior, gz, 0.5)
        with np.errstate(over="ignore", divide="ignore"):
            out = np.where(interior, 1.0 / self.potential._hess(safe), 0.0)
        return out

    def with_engine(self, engine) -> "FyLoss":
        return FyLoss(self.potential, Engine(engine))

    def to_config(self) -> dict:
        return {**self.potential.to_config(), "engine": self.engine.value}


def _scalarize(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def make_loss(kind, q=None, engine=None) -> FyLoss:
    """Build a loss from a potential name, accepting ``logistic`` for Shannon."""
    if isinstance(kind, Potential):
        return FyLoss(kind, engine)
    name = str(kind).lower()
    aliases = {"logistic": "shannon", "modified_huber": "gini", "huber": "gini",
               "semi-circle": "semicircle", "pseudo-spherical": "pseudospherical"}
    return FyLoss(Potential(aliases.get(name, name), q), engine)


# ---------------------------------------------------------------------------
# pointwise operations


def loss(l: FyLoss, z):
    return l.value(z)


def g(l: FyLoss, z):
    return l.dual(z)


def loss_curvature(l: FyLoss, z):
    """Second derivative of the loss via ``1 / phi''(g(z))``; 0 where saturated."""
    return l.curvature(z)


def loss_inverse(l: FyLoss, eps: float, z_floor: float = -1e6) -> float:
    """The unique z on the strictly decreasing branch with ``loss(z) = eps``."""
    if not eps > 0:
        raise DomainError("loss_inverse needs eps > 0")
    top = l.value(z_floor)
    if not eps < top:
        raise BracketError(f"eps={eps:g} not below loss(z_floor)={top:g}")
    if l.margin is not None:
        hi = l.margin
    else:
        hi = 1.0
        while l.value(hi) > eps:
            hi *= 2.0
            if hi > 1e300:
                raise BracketError("could not bracket the loss inverse")
    f = lambda z: l.value(z) - eps
    if f(hi) == 0:
        return float(hi)
    return float(optimize.brentq(f, z_floor, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=2000))


def separation_margin(l: FyLoss) -> Optional[float]:
    """``-lim phi'(mu)`` as mu decreases to 0, or None if the limit is infinite."""
    return l.margin


def probe_margin(p: Potential, ks=range(6, 13), tol: float = 1e-6) -> Optional[float]:
    """Numeric cross-check: Cauchy test on ``phi'(10^-k)``.

    Slowly converging families (q close to 1) fail this test even though
    the analytic limit is finite, so the analytic value is authoritative.
    """
    vals = np.array([p.grad(10.0 ** (-k)) for k in ks])
    if np.all(np.abs(np.diff(vals)) <= tol * np.maximum(1.0, np.abs(vals[1:]))):
        return float(-vals[-1])
    return None


# ---------------------------------------------------------------------------
# rho


def rho(l: FyLoss, lam, iters: int = 200):
    """``min_z lam * loss(z) + z^2`` for scalar or array ``lam > 0``.

    The derivative ``2z - lam * g(z)`` is nondecreasing, so the minimizer is
    located by bisection on it. It lies in ``[0, lam/2]`` and, for margin
    losses, below ``m``.
    """
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(~(lam_arr > 0)) or not np.all(np.isfinite(lam_arr)):
        raise DomainError("rho needs finite lambda > 0")
    flat = lam_arr.reshape(-1)
    lo = np.zeros_like(flat)
    hi = 0.5 * flat
    if l.margin is not None:
        hi = np.minimum(hi, l.margin)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        deriv = 2.0 * mid - flat * l.pair(mid)[1]
        lo = np.where(deriv < 0, mid, lo)
        hi = np.where(deriv < 0, hi, mid)
        if np.all(hi - lo <= 4e-16 * np.maximum(hi, 1e-300)):
            break
    cands = np.stack([lo, hi])
    vals = flat * l.pair(cands)[0] + cands**2
    out = vals.min(axis=0).reshape(lam_arr.shape)
    return _scalarize(out)


# ---------------------------------------------------------------------------
# rate exponent and constant


def _energy(p: Potential, mu: float) -> float:
    """``mu phi'(mu) - phi(mu) = int_0^mu s phi''(s) ds`` without cancellation."""
    h = lambda u: u * p._hess(np.asarray(mu * u))
    with np.errstate(divide="ignore", over="ignore"):
        val, _ = integrate.quad(h, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    return float(mu * mu * val)


def rate_integrand_exponent(p: Potential, mu: float) -> float:
    """``(mu phi' - phi) / (mu^2 phi'')`` evaluated as an integral ratio."""
    if not p.smooth:
        raise UnsupportedOperation("rate exponent needs a smooth potential")
    hm = float(p._hess(np.asarray(mu)))
    h = lambda u: u * p._hess(np.asarray(mu * u)) / hm
    with np.errstate(divide="ignore", over="ignore"):
        val, _ = integrate.quad(h, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    return float(val)


def _mu_bar(l: FyLoss, eps_bar: float) -> float:
    return min(float(l.dual(loss_inverse(l, eps_bar))), 1.0)


def alpha_profile(l: FyLoss, top: float, floor: float = 1e-9, levels: int = 41):
    """Grid ``mu = top * 2^-j`` clipped at ``floor`` and the exponent on it."""
    mus = top * 2.0 ** (-np.arange(levels))
    mus = mus[mus >= floor]
    if mus.size == 0 or mus[-1] > floor:
        mus = np.append(mus, floor)
    vals = np.array([rate_integrand_exponent(l.potential, m) for m in mus])
    return mus, vals


def alpha_exponent(l: FyLoss, eps_bar: float = 1e-2, floor: float = 1e-9) -> Tuple[float, bool]:
    """Supremum of the rate exponent over ``(0, max(eps_bar, mu_bar)]``.

    Returns ``(alpha, converged)``; convergence means the last eight grid
    values agree within 1e-3.
    """
    alpha, converged, _ = _alpha_details(l, eps_bar, floor)
    return alpha, converged


def _alpha_details(l: FyLoss, eps_bar: float, floor: float = 1e-9):
    if not l.smooth:
        raise UnsupportedOperation("rate exponent needs a smooth potential")
    if not 0 < eps_bar < 1:
        raise DomainError("eps_bar must lie in (0, 1)")
    top = min(max(eps_bar, _mu_bar(l, eps_bar)), 0.5)
    mus, vals = alpha_profile(l, top, floor)
    tail = vals[-8:]
    converged = bool(np.ptp(tail) <= 1e-3)
    return float(vals.max()), converged, float(vals[-1])


def c_phi(l: FyLoss, eps_bar: float, alpha: float) -> float:
    """``mu_bar / (mu_bar phi'(mu_bar) - phi(mu_bar))^alpha``.

    The energy in the denominator equals ``loss(loss^{-1}(eps_bar))`` so the
    result also equals ``mu_bar / eps_bar^alpha``; the two are cross-checked.
    """
    if not (math.isfinite(alpha) and alpha > 0):
        raise AnalysisError("c_phi needs a finite positive alpha")
    mu_bar = _mu_bar(l, eps_bar)
    if not 0 < mu_bar < 1:
        raise AnalysisError(f"degenerate mu_bar={mu_bar!r}")
    energy = _energy(l.potential, mu_bar)
    if not energy > 0:
        raise AnalysisError("vanishing energy at mu_bar")
    direct = mu_bar / energy**alpha
    order_form = mu_bar / eps_bar**alpha
    if abs(direct - order_form) > 1e-8 * abs(order_form):
        raise AnalysisError(f"C_phi forms disagree: {direct!r} vs {order_form!r}")
    return float(direct)


def c_phi_limit(l: FyLoss, alpha: float, mu: float = 1e-9) -> float:
    """``mu / E(mu)^alpha`` deep in the tail, an estimate of the limit constant."""
    return float(mu / _energy(l.potential, mu) ** alpha)


# ---------------------------------------------------------------------------
# Lipschitz, smoothness, self-bounding


def lipschitz_cg(l: FyLoss) -> float:
    """``sup g``: the grid maximum, raised to the limit 1 of ``g`` at minus infinity.

    Slow tails (semi-circle) leave the grid maximum short of the supremum,
    and an underestimate would make the bounds unsafe.
    """
    zs = np.linspace(-1e3, 1e3, 2001)
    grid = float(l.pair(zs)[1].max())
    return max(grid, 1.0)


def smoothness_estimate(l: FyLoss) -> float:
    """``1 / inf phi''`` over a fine grid and the endpoint limits.

    Returns ``inf`` when the infimum is zero.
    """
    p = l.potential
    if not p.smooth:
        raise UnsupportedOperation("smoothness needs a smooth potential")
    inner = np.linspace(1e-9, 0.5, 20001)
    tails = np.geomspace(1e-9, 1e-2, 400)
    grid = np.concatenate([inner, tails])
    with np.errstate(over="ignore"):
        low = min(float(np.min(p._hess(grid))), p.hess_at_zero)
    if low <= 0:
        return math.inf
    return 1.0 / low


def curvature_jump_at_margin(l: FyLoss) -> float:
    """Left limit of the loss curvature at the margin (right limit is 0).

    A positive value means the derivative of the loss has a kink in slope at
    the margin; 0 for losses without margin or with a smooth junction.
    """
    if l.margin is None:
        return 0.0
    h0 = l.potential.hess_at_zero
    return 0.0 if math.isinf(h0) else (math.inf if h0 == 0 else 1.0 / h0)


class Trend(str, enum.Enum):
    BOUNDED = "bounded"
    DIVERGING = "diverging"


@dataclass(frozen=True)
class SelfBoundingReport:
    c_beta_hat: float
    ratio_trend: Trend
    c_e_hat: float
    reason: str = ""

    @property
    def self_bounding(self) -> bool:
        return self.ratio_trend is Trend.BOUNDED

    def to_dict(self) -> dict:
        return {
            "c_beta_hat": _json_real(self.c_beta_hat),
            "ratio_trend": self.ratio_trend.value,
            "c_e_hat": _json_real(self.c_e_hat),
            "self_bounding": self.self_bounding,
            "reason": self.reason,
        }


TREND_FACTOR = 1.5


def self_bounding_probe(l: FyLoss) -> SelfBoundingReport:
    """Estimate ``sup g / loss`` and ``sup loss / g`` on probe grids.

    Margin losses are never self-bounding: the ratio blows up at the margin.
    Otherwise the trend is diverging when the ratio at ``z = 20`` exceeds the
    ratio at ``z = 10`` by ``TREND_FACTOR``.
    """
    zs = np.linspace(-10.0, 10.0, 401)
    ze = np.linspace(0.0, 10.0, 201)
    if l.margin is not None:
        cut = l.margin - 1e-6
        zs = zs[zs <= cut]
        if zs.size == 0 or zs[-1] < cut:
            zs = np.append(zs, cut)
        ze = ze[ze <= cut]
    val, gz = l.pair(zs)
    keep = val > 1e-300
    c_beta = float(np.max(gz[keep] / val[keep]))
    ve, ge = l.pair(ze)
    keep_e = ge > 0
    c_e = float(np.max(ve[keep_e] / ge[keep_e])) if np.any(keep_e) else math.inf
    if l.margin is not None:
        return SelfBoundingReport(c_beta, Trend.DIVERGING, c_e,
                                  "finite separation margin: g/loss blows up at the margin")
    (v10, v20), (g10, g20) = l.pair(np.array([10.0, 20.0]))
    growth = (g20 / v20) / (g10 / v10)
    trend = Trend.DIVERGING if growth >= TREND_FACTOR else Trend.BOUNDED
    return SelfBoundingReport(c_beta, trend, c_e, f"ratio growth from z=10 to z=20 is {growth:.4g}")


# ---------------------------------------------------------------------------
# aggregated analysis


def _json_real(x):
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass(frozen=True)
class LossAnalysis:
    loss_name: str
    margin: Optional[float]
    eps_bar: float
    c_g: float
    neg_phi_half: float
    alpha: Optional[float] = None
    alpha_converged: bool = False
    alpha_limit: Optional[float] = None
    c_phi: Optional[float] = None
    c_phi_limit: Optional[float] = None
    mu_bar: Optional[float] = None
    beta_hat: Optional[float] = None
    curvature_jump: Optional[float] = None
    rho_samples: List[Tuple[float, float]] = field(default_factory=list)
    self_bounding: Optional[SelfBoundingReport] = None
    skipped: Dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "loss": self.loss_name,
            "margin": self.margin,
            "eps_bar": self.eps_bar,
            "alpha": self.alpha,
            "alpha_converged": self.alpha_converged,
            "alpha_limit": self.alpha_limit,
            "c_phi": self.c_phi,
            "c_phi_limit": self.c_phi_limit,
            "mu_bar": self.mu_bar,
            "c_g": self.c_g,
            "neg_phi_half": self.neg_phi_half,
            "beta_hat": _json_real(self.beta_hat),
            "curvature_jump_at_margin": _json_real(self.curvature_jump),
            "rho_samples": [[lam, _json_real(r)] for lam, r in self.rho_samples],
            "self_bounding": None if self.self_bounding is None else self.self_bounding.to_dict(),
            "skipped": dict(self.skipped),
        }


def analyze(l: FyLoss, eps_bar: float = 1e-2, rho_lambdas=RHO_LAMBDAS) -> LossAnalysis:
    """Compute every derived constant the bounds and checks need."""
    if not 0 < eps_bar < 1:
        raise DomainError("eps_bar must lie in (0, 1)")
    lams = [float(x) for x in rho_lambdas]
    rhos = np.atleast_1d(rho(l, np.array(lams)))
    base = dict(
        loss_name=l.name,
        margin=l.margin,
        eps_bar=eps_bar,
        c_g=lipschitz_cg(l),
        neg_phi_half=-l.potential.center_value,
        rho_samples=list(zip(lams, [float(r) for r in rhos])),
        self_bounding=self_bounding_probe(l),
    )
    if not l.smooth:
        reason = "potential is not differentiable; rate exponent and smoothness undefined"
        return LossAnalysis(**base, skipped={k: reason for k in ("alpha", "c_phi", "beta_hat")})
    alpha, converged, alpha_lim = _alpha_details(l, eps_bar)
    return LossAnalysis(
        **base,
        alpha=alpha,
        alpha_converged=converged,
        alpha_limit=alpha_lim,
        c_phi=c_phi(l, eps_bar, alpha),
        c_phi_limit=c_phi_limit(l, alpha_lim),
        mu_bar=_mu_bar(l, eps_bar),
        beta_hat=smoothness_estimate(l),
        curvature_jump=curvature_jump_at_margin(l),
    )


# ---------------------------------------------------------------------------
# iteration bounds


def iteration_bound(a: LossAnalysis, n: int, gamma: float, eta: float, eps: float) -> float:
    """Steps after which the best iterate is guaranteed eps-optimal.

    Margin losses: ``n/(C_phi gamma^2) (4m/eta + C_g) eps^-alpha``.
    Otherwise: ``2 C_g n/(C_phi gamma^2) eps^-alpha
    + 16 (-phi(1/2)) n^2/(C_phi^2 gamma^2 eta) eps^-2alpha``.
    """
    if a.alpha is None or a.c_phi is None or not a.alpha_converged:
        raise AnalysisError("iteration bound needs a converged rate exponent")
    if not (n >= 1 and gamma > 0 and eta > 0):
        raise DomainError("need n >= 1, gamma > 0 and eta > 0")
    if not 0 < eps < a.eps_bar:
        raise DomainError(f"eps must lie in (0, eps_bar={a.eps_bar:g})")
    alpha, cphi = a.alpha, a.c_phi
    if a.margin is not None:
        return n / (cphi * gamma**2) * (4 * a.margin / eta + a.c_g) * eps ** (-alpha)
    first = 2 * a.c_g * n / (cphi * gamma**2) * eps ** (-alpha)
    second = 16 * a.neg_phi_half * n**2 / (cphi**2 * gamma**2 * eta) * eps ** (-2 * alpha)
    return first + second
