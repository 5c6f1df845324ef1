"""Linearly separable datasets and max-margin certificates."""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigurationError, NotSeparableError

__all__ = [
    "Dataset",
    "MarginCertificate",
    "SeparableDistribution",
    "NormWarning",
    "pilot_dataset",
    "margin_certificate",
    "synth_separable",
    "load_csv",
    "save_csv",
]


class NormWarning(UserWarning):
    """Some inputs have norm above one."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Points ``x`` of shape (n, d) with labels ``y`` in {-1, +1}."""

    x: np.ndarray
    y: np.ndarray
    name: str = "dataset"
    z: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = np.array(self.x, dtype=float, copy=True)
        y = np.array(self.y, dtype=float, copy=True).reshape(-1)
        if x.ndim == 1:
            x = x.reshape(1, -1)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise ConfigurationError("dataset needs at least one point with at least one feature")
        if y.shape[0] != x.shape[0]:
            raise ConfigurationError("x and y lengths differ")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ConfigurationError("dataset contains non-finite values")
        if not np.all((y == 1) | (y == -1)):
            raise ConfigurationError("labels must be -1 or +1")
        x.setflags(write=False)
        y.setflags(write=False)
        z = x * y[:, None]
        z.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)
        if self.max_norm > 1 + 1e-12:
            warnings.warn(
                f"{self.name}: max input norm {self.max_norm:.4g} exceeds 1",
                NormWarning,
                stacklevel=3,
            )

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @property
    def max_norm(self) -> float:
        return float(np.linalg.norm(self.x, axis=1).max())

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)

    __hash__ = None


@dataclass(frozen=True)
class MarginCertificate:
    """Unit direction ``w_star`` with ``<w_star, z_i> >= gamma`` for all i.

    ``gamma`` is the certified margin ``min_i <w_star, z_i>``; ``residual``
    is the distance gap between the hull point norm and that margin.
    """

    w_star: np.ndarray
    gamma: float
    residual: float
    support: int = 0

    def to_dict(self) -> dict:
        return {
            "w_star": [float(v) for v in self.w_star],
            "gamma": self.gamma,
            "residual": self.residual,
            "support": self.support,
        }


def pilot_dataset() -> Dataset:
    """Four points in the plane; two of them have norm above one."""
    x = np.array([[1.0, 0.2], [-2.0, 0.2], [-1.0, -0.2], [2.0, -0.2]])
    y = np.array([1.0, 1.0, -1.0, -1.0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NormWarning)
        ds = Dataset(x, y, name="pilot")
    warnings.warn("pilot: inputs with norm above 1 (kept as published)", NormWarning, stacklevel=2)
    return ds


def _gilbert(z: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    """Hull weights of the point of ``conv{z_i}`` nearest the origin.

    Gilbert's Frank-Wolfe iteration with away steps and exact line search.
    Stops when the distance gap ``|w| - min_i <w, z_i> / |w|`` is at most
    ``tol``.
    """
    n = z.shape[0]
    gram = z @ z.T
    weights = np.zeros(n)
    start = int(np.argmin(np.diag(gram)))
    weights[start] = 1.0
    w = z[start].copy()
    for _ in range(max_iter):
        scores = z @ w
        wn2 = float(w @ w)
        if wn2 < 1e-24:
            break
        toward = int(np.argmin(scores))
        gap = wn2 - float(scores[toward])
        if gap <= tol * math.sqrt(wn2):
            break
        active = np.flatnonzero(weights > 0)
        away = int(active[np.argmax(scores[active])])
        away_gap = float(scores[away]) - wn2
        if gap >= away_gap:
            # exact line search on |w + s (z_toward - w)|^2, s in [0, 1]
            denom = gram[toward, toward] - 2 * scores[toward] + wn2
            step = min(1.0, gap / denom) if denom > 0 else 1.0
            weights *= 1 - step
            weights[toward] += step
        else:
            wa = weights[away]
            max_step = wa / (1 - wa) if wa < 1 else math.inf
            denom = gram[away, away] - 2 * scores[away] + wn2
            step = min(max_step, away_gap / denom) if denom > 0 else max_step
            weights *= 1 + step
            weights[away] -= step
            if step == max_step:
                weights[away] = 0.0
        weights = np.maximum(weights, 0.0)
        weights /= weights.sum()
        w = weights @ z
    return weights


def _affine_min_norm(pts: np.ndarray) -> np.ndarray:
    """Weights summing to one of the min-norm point on the affine hull of ``pts``."""
    k = pts.shape[0]
    mat = pts @ pts.T + 1.0
    coef = np.linalg.lstsq(mat, np.ones(k), rcond=None)[0]
    return coef / coef.sum()


def _wolfe(z: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    """Hull weights of the nearest point via Wolfe's min-norm-point method.

    Keeps an affinely independent corral ``S``; each major step adds the
    most violating point, and minor steps move toward the affine minimizer
    of ``S`` and drop points whose weight hits zero.
    """
    n = z.shape[0]
    first = int(np.argmin(np.einsum("ij,ij->i", z, z)))
    corral = [first]
    lam = np.array([1.0])
    x = z[first].copy()
    for _ in range(max_iter):
        scores = z @ x
        j = int(np.argmin(scores))
        xn2 = float(x @ x)
        if xn2 < 1e-24 or xn2 - scores[j] <= tol * math.sqrt(xn2) or j in corral:
            break
        corral.append(j)
        lam = np.append(lam, 0.0)
        for _ in range(max_iter):
            alpha = _affine_min_norm(z[corral])
            if np.all(alpha > 0):
                lam = alpha
                break
            shrink = alpha < lam
            ratios = lam[shrink] / (lam[shrink] - alpha[shrink])
            theta = float(np.min(ratios[alpha[shrink] <= 0], initial=1.0))
            lam = lam + theta * (alpha - lam)
            keep = lam > 1e-15
            keep[np.argmax(lam)] = True
            corral = [c for c, k in zip(corral, keep) if k]
            lam = lam[keep] / lam[keep].sum()
        x = lam @ z[corral]
    weights = np.zeros(n)
    weights[corral] = lam
    return weights


def margin_certificate(
    d: Dataset, tol: float = 1e-10, max_iter: int = 10**6, method: str = "wolfe"
) -> MarginCertificate:
    """Max-margin direction through the origin with a duality-gap residual.

    The max margin equals the distance from the origin to ``conv{z_i}``.
    ``method="wolfe"`` finds the nearest point exactly in finitely many
    steps; ``method="gilbert"`` runs Gilbert's iteration with away steps.
    ``gamma`` is the margin actually achieved by ``w_star`` and ``residual``
    is ``|p| - gamma`` for the hull point ``p``, an upper bound on the
    suboptimality of ``gamma``.
    """
    z = np.unique(d.z, axis=0)
    if method == "wolfe":
        weights = _wolfe(z, tol, max_iter)
    elif method == "gilbert":
        weights = _gilbert(z, tol, max_iter)
    else:
        raise ConfigurationError(f"unknown certificate method {method!r}")
    p = weights @ z
    norm = float(np.linalg.norm(p))
    if norm < 1e-12:
        raise NotSeparableError("origin lies in the convex hull of the signed points")
    w_star = p / norm
    gamma = float((d.z @ w_star).min())
    if gamma <= 0:
        raise NotSeparableError(f"no separating direction found (best margin {gamma:.3g})")
    return MarginCertificate(w_star, gamma, max(norm - gamma, 0.0), int(np.count_nonzero(weights)))


@dataclass(frozen=True)
class SeparableDistribution:
    """Uniform on the unit ball in dimension ``dim``, labelled by ``direction``,
    conditioned on ``|<direction, x>| >= gamma_target``."""

    dim: int
    gamma_target: float
    direction: Optional[tuple] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigurationError("dimension must be positive")
        if not 0 < self.gamma_target < 0.9:
            raise ConfigurationError("gamma_target must lie in (0, 0.9)")
        u = np.zeros(self.dim) if self.direction is None else np.asarray(self.direction, float)
        if self.direction is None:
            u[0] = 1.0
        if u.shape != (self.dim,) or not np.isclose(np.linalg.norm(u), 1.0):
            raise ConfigurationError("direction must be a unit vector of the right dimension")
        object.__setattr__(self, "direction", tuple(float(v) for v in u))

    @property
    def unit(self) -> np.ndarray:
        return np.array(self.direction)

    def sample(self, rng: np.random.Generator, n: int):
        """Draw ``n`` labelled points; returns ``(x, y)``."""
        u = self.unit
        xs = []
        have = 0
        while have < n:
            batch = max(2 * (n - have), 64)
            g = rng.standard_normal((batch, self.dim))
            g /= np.linalg.norm(g, axis=1, keepdims=True)
            x = g * rng.random(batch)[:, None] ** (1.0 / self.dim)
            x = x[np.abs(x @ u) >= self.gamma_target]
            xs.append(x)
            have += x.shape[0]
        x = np.concatenate(xs)[:n]
        y = np.where(x @ u >= 0, 1.0, -1.0)
        return x, y


def synth_separable(seed: int, n: int, d: int, gamma_target: float) -> Dataset:
    """Deterministic separable sample with margin at least ``gamma_target``."""
    if n < 1:
        raise ConfigurationError("n must be at least 1")
    dist = SeparableDistribution(d, gamma_target)
    x, y = dist.sample(np.random.default_rng(seed), n)
    return Dataset(x, y, name=f"synth-{seed}-{n}-{d}-{gamma_target:g}")


def save_csv(d: Dataset, path) -> None:
    header = [f"x{j + 1}" for j in range(d.dim)] + ["y"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for xi, yi in zip(d.x, d.y):
            writer.writerow([repr(float(v)) for v in xi] + [int(yi)])


def load_csv(path, name: Optional[str] = None) -> Dataset:
    """Strict reader: header ``x1..xd,y``, finite floats, labels in {-1, 1}."""
    text = Path(path).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ConfigurationError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    d = len(header) - 1
    if d < 1 or header != [f"x{j + 1}" for j in range(d)] + ["y"]:
        raise ConfigurationError(f"{path}: header must be x1,...,xd,y")
    body = [r for r in rows[1:] if r and any(c.strip() for c in r)]
    if not body:
        raise ConfigurationError(f"{path}: no data rows")
    x = np.empty((len(body), d))
    y = np.empty(len(body))
    for i, row in enumerate(body):
        if len(row) != d + 1:
            raise ConfigurationError(f"{path}: row {i + 2} has {len(row)} fields, expected {d + 1}")
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise ConfigurationError(f"{path}: row {i + 2} is not numeric") from None
        if not all(math.isfinite(v) for v in vals):
            raise ConfigurationError(f"{path}: row {i + 2} has a non-finite value")
        if vals[-1] not in (-1.0, 1.0):
            raise ConfigurationError(f"{path}: row {i + 2} label must be -1 or 1")
        x[i] = vals[:-1]
        y[i] = vals[-1]
    return Dataset(x, y, name=name or Path(path).stem)
