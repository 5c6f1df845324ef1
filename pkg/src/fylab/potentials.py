"""Binary entropy potentials on [0, 1] and their exact derivatives.

Every potential here is symmetric about 1/2, convex, and vanishes at both
endpoints. The hinge potential is piecewise linear and only supports value
and subgradient queries.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from .errors import ConfigurationError, DomainError, UnsupportedOperation

__all__ = [
    "Kind",
    "Potential",
    "phi",
    "phi_grad",
    "phi_hess",
    "PSEUDOSPHERICAL_Q_MAX",
]

PSEUDOSPHERICAL_Q_MAX = 64.0
_SQRT_2PI = math.sqrt(2.0 * math.pi)


class Kind(str, enum.Enum):
    SHANNON = "shannon"
    GINI = "gini"
    TSALLIS = "tsallis"
    RENYI = "renyi"
    SEMICIRCLE = "semicircle"
    HINGE = "hinge"
    PROBIT = "probit"
    PSEUDOSPHERICAL = "pseudospherical"


_PARAMETRIC = {Kind.TSALLIS, Kind.RENYI, Kind.PSEUDOSPHERICAL}


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


@dataclass(frozen=True)
class Potential:
    """A symmetric binary negentropy.

    Parameters
    ----------
    kind : Kind or str
        Family name, e.g. ``"tsallis"``.
    q : float, optional
        Family parameter. Required for Tsallis (q > 0, q != 1), Renyi
        (q in (0, 2] minus {1}) and pseudo-spherical (q in (1, 64]).
    """

    kind: Kind
    q: Optional[float] = None

    def __post_init__(self):
        try:
            kind = Kind(self.kind)
        except ValueError:
            raise ConfigurationError(f"unknown potential kind {self.kind!r}") from None
        object.__setattr__(self, "kind", kind)
        q = self.q
        if kind in _PARAMETRIC:
            if q is None or not math.isfinite(q):
                raise ConfigurationError(f"{kind.value} needs a finite parameter q")
            q = float(q)
            if kind is Kind.TSALLIS and (q <= 0 or q == 1):
                raise ConfigurationError("tsallis needs q > 0 and q != 1")
            if kind is Kind.RENYI and (q <= 0 or q == 1 or q > 2):
                raise ConfigurationError("renyi needs q in (0, 2] without 1; q > 2 is nonconvex")
            if kind is Kind.PSEUDOSPHERICAL and not (1 < q <= PSEUDOSPHERICAL_Q_MAX):
                raise ConfigurationError(
                    f"pseudospherical needs q in (1, {PSEUDOSPHERICAL_Q_MAX:g}]"
                )
            object.__setattr__(self, "q", q)
        elif q is not None:
            raise ConfigurationError(f"{kind.value} takes no parameter q")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_config(cls, cfg: dict) -> "Potential":
        if not isinstance(cfg, dict) or "kind" not in cfg:
            raise ConfigurationError(f"potential config needs a 'kind' key, got {cfg!r}")
        extra = set(cfg) - {"kind", "q"}
        if extra:
            raise ConfigurationError(f"unexpected potential config keys {sorted(extra)}")
        return cls(str(cfg["kind"]).lower(), cfg.get("q"))

    def to_config(self) -> dict:
        cfg = {"kind": self.kind.value}
        if self.q is not None:
            cfg["q"] = self.q
        return cfg

    @property
    def name(self) -> str:
        return self.kind.value if self.q is None else f"{self.kind.value}-{self.q:g}"

    @property
    def smooth(self) -> bool:
        return self.kind is not Kind.HINGE

    # -- evaluation -------------------------------------------------------------

    def value(self, mu):
        mu = np.asarray(mu, dtype=float)
        if np.any(~((mu >= 0) & (mu <= 1))):
            raise DomainError("potential is defined on [0, 1]")
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            v = self._value(mu)
        v = np.where((mu == 0) | (mu == 1), 0.0, v)
        return _out(v)

    def grad(self, mu):
        mu = np.asarray(mu, dtype=float)
        if self.kind is Kind.HINGE:
            if np.any(~((mu >= 0) & (mu <= 1))):
                raise DomainError("hinge subgradient queried outside [0, 1]")
            return _out(np.sign(mu - 0.5))
        if np.any(~((mu > 0) & (mu < 1))):
            raise DomainError("derivative is only defined on the open interval (0, 1)")
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return _out(self._grad(mu))

    def hess(self, mu):
        if not self.smooth:
            raise UnsupportedOperation("hinge potential has no second derivative")
        mu = np.asarray(mu, dtype=float)
        if np.any(~((mu > 0) & (mu < 1))):
            raise DomainError("second derivative is only defined on (0, 1)")
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return _out(self._hess(mu))

    @property
    def grad_at_zero(self) -> float:
        """One-sided limit of the derivative as mu decreases to 0."""
        k, q = self.kind, self.q
        if k in (Kind.SHANNON, Kind.SEMICIRCLE, Kind.PROBIT):
            return -math.inf
        if k in (Kind.GINI, Kind.HINGE, Kind.PSEUDOSPHERICAL):
            return -1.0
        # tsallis / renyi
        return -math.inf if q < 1 else -q / (q - 1)

    @property
    def hess_at_zero(self) -> float:
        """One-sided limit of the second derivative as mu decreases to 0."""
        if not self.smooth:
            raise UnsupportedOperation("hinge potential has no second derivative")
        k, q = self.kind, self.q
        if k in (Kind.SHANNON, Kind.SEMICIRCLE, Kind.PROBIT):
            return math.inf
        if k is Kind.GINI:
            return 2.0
        if k is Kind.TSALLIS:
            return math.inf if q < 2 else (4.0 if q == 2 else q)
        if k is Kind.RENYI:
            return math.inf if q < 2 else 0.0
        # pseudospherical: (q-1) * mu^(q-2) near 0
        return math.inf if q < 2 else (1.0 if q == 2 else 0.0)

    @property
    def center_value(self) -> float:
        """phi(1/2), the minimum of the potential."""
        return float(self.value(0.5))

    # -- per-family formulas ------------------------------------------------------

    def _value(self, mu):
        k, q = self.kind, self.q
        nu = 1.0 - mu
        if k is Kind.SHANNON:
            return special.xlogy(mu, mu) + special.xlogy(nu, nu)
        if k is Kind.GINI:
            return mu * mu - mu
        if k is Kind.TSALLIS:
            return (mu**q + np.expm1(q * np.log1p(-mu))) / (q - 1)
        if k is Kind.RENYI:
            return np.log1p(mu**q + np.expm1(q * np.log1p(-mu))) / (q - 1)
        if k is Kind.SEMICIRCLE:
            return -2.0 * np.sqrt(mu * nu)
        if k is Kind.HINGE:
            return np.maximum(mu, nu) - 1.0
        if k is Kind.PROBIT:
            x = special.ndtri(mu)
            return -np.exp(-0.5 * x * x) / _SQRT_2PI
        # pseudospherical
        return np.expm1(np.log(mu**q + nu**q) / q)

    def _grad(self, mu):
        k, q = self.kind, self.q
        nu = 1.0 - mu
        if k is Kind.SHANNON:
            return np.log(mu) - np.log1p(-mu)
        if k is Kind.GINI:
            return 2.0 * mu - 1.0
        if k is Kind.TSALLIS:
            return q / (q - 1) * (mu ** (q - 1) - nu ** (q - 1))
        if k is Kind.RENYI:
            s = mu**q + nu**q
            return q * (mu ** (q - 1) - nu ** (q - 1)) / ((q - 1) * s)
        if k is Kind.SEMICIRCLE:
            return (2.0 * mu - 1.0) / np.sqrt(mu * nu)
        if k is Kind.PROBIT:
            return special.ndtri(mu)
        s = mu**q + nu**q
        return s ** (1.0 / q - 1.0) * (mu ** (q - 1) - nu ** (q - 1))

    def _hess(self, mu):
        k, q = self.kind, self.q
        nu = 1.0 - mu
        if k is Kind.SHANNON:
            return 1.0 / mu + 1.0 / nu
        if k is Kind.GINI:
            return np.full_like(mu, 2.0)
        if k is Kind.TSALLIS:
            return q * (mu ** (q - 2) + nu ** (q - 2))
        if k is Kind.RENYI:
            s = mu**q + nu**q
            if q == 2:
                # 1 - (2mu-1)^2 written without cancellation
                return 8.0 * mu * nu / (s * s)
            d1 = mu ** (q - 1) - nu ** (q - 1)
            return q * ((q - 1) * (mu * nu) ** (q - 2) - d1 * d1) / ((q - 1) * s * s)
        if k is Kind.SEMICIRCLE:
            return 0.5 / (mu * nu) ** 1.5
        if k is Kind.PROBIT:
            x = special.ndtri(mu)
            return _SQRT_2PI * np.exp(0.5 * x * x)
        s = mu**q + nu**q
        return (q - 1) * s ** (1.0 / q - 2.0) * (mu * nu) ** (q - 2)


def phi(p: Potential, mu):
    """Potential value; exactly 0 at mu in {0, 1}."""
    return p.value(mu)


def phi_grad(p: Potential, mu):
    """First derivative on (0, 1); the hinge returns its sign subgradient."""
    return p.grad(mu)


def phi_hess(p: Potential, mu):
    """Second derivative on (0, 1) for smooth potentials."""
    return p.hess(mu)
