"""Gradient descent and one-sample SGD on separable data, with diagnostics.

Each recorded row of a trace stores the risk, the running best risk, the
gradient norm, the parameter norm, the alignment with the certificate
direction, the gradient potential ``G(w) = mean_i g(<w, z_i>)`` and its
running sum, an optional sharpness sample and the smallest data margin.
Hitting times for a list of tolerances are tracked at every step, so
thinning the recorded rows never biases them.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from .data import Dataset, MarginCertificate, SeparableDistribution, margin_certificate
from .errors import ConfigurationError, DivergenceError, NotSeparableError, UnsupportedOperation
from .fenchel import FyLoss, LossAnalysis, rho

__all__ = [
    "Mode",
    "RunConfig",
    "Trace",
    "PhaseReport",
    "SgdBound",
    "TRACE_COLUMNS",
    "DEFAULT_EPS_GRID",
    "risk",
    "risk_grad",
    "sharpness",
    "gd_run",
    "sgd_run",
    "run",
    "phase_detect",
    "sgd_bound",
    "default_record_every",
]

TRACE_COLUMNS = (
    "t",
    "risk",
    "min_risk",
    "grad_norm",
    "w_norm",
    "alignment",
    "g_potential",
    "cum_g",
    "sharpness",
    "min_margin",
)
DEFAULT_EPS_GRID = (1e-1, 1e-2, 1e-3, 1e-4, 1e-6, 1e-8)
RISK_CAP = 1e300
NORM_CAP = 1e150


class Mode(str, enum.Enum):
    GD = "gd"
    SGD = "sgd"


def default_record_every(steps: int) -> int:
    return 1 if steps <= 10**4 else math.ceil(steps / 10**4)


@dataclass(frozen=True)
class RunConfig:
    """One optimizer run.

    ``data`` is a fixed dataset for GD and a sampling distribution for SGD.
    ``sharpness_every`` counts recorded rows between sharpness samples
    (0 disables them).
    """

    loss: FyLoss
    data: Union[Dataset, SeparableDistribution]
    eta: float
    steps: int
    mode: Mode = Mode.GD
    seed: int = 0
    init: Optional[tuple] = None
    record_every: Optional[int] = None
    sharpness_every: int = 0
    eps_grid: tuple = DEFAULT_EPS_GRID
    holdout: int = 10**4

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise ConfigurationError("eta must be a finite positive number")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ConfigurationError("steps must be a positive integer")
        object.__setattr__(self, "steps", int(self.steps))
        if self.mode is Mode.GD and not isinstance(self.data, Dataset):
            raise ConfigurationError("GD needs a Dataset")
        if self.mode is Mode.SGD and not isinstance(self.data, SeparableDistribution):
            raise ConfigurationError("SGD needs a SeparableDistribution")
        if self.init is not None:
            init = tuple(float(v) for v in self.init)
            if len(init) != self.dim or not all(map(math.isfinite, init)):
                raise ConfigurationError("init must be a finite vector matching the data dimension")
            object.__setattr__(self, "init", init)
        every = default_record_every(self.steps) if self.record_every is None else int(self.record_every)
        if every < 1:
            raise ConfigurationError("record_every must be positive")
        object.__setattr__(self, "record_every", every)
        if self.sharpness_every < 0:
            raise ConfigurationError("sharpness_every must be nonnegative")
        eps = tuple(sorted((float(e) for e in self.eps_grid), reverse=True))
        if any(not e > 0 for e in eps):
            raise ConfigurationError("tolerances must be positive")
        object.__setattr__(self, "eps_grid", eps)
        if self.mode is Mode.SGD and self.holdout < 1:
            raise ConfigurationError("holdout panel must be nonempty")

    @property
    def dim(self) -> int:
        return self.data.dim

    @property
    def w0(self) -> np.ndarray:
        return np.zeros(self.dim) if self.init is None else np.array(self.init)

    def to_dict(self) -> dict:
        out = {
            "loss": self.loss.to_config(),
            "eta": self.eta,
            "steps": self.steps,
            "mode": self.mode.value,
            "init": None if self.init is None else list(self.init),
            "record_every": self.record_every,
            "sharpness_every": self.sharpness_every,
            "eps_grid": list(self.eps_grid),
        }
        if isinstance(self.data, Dataset):
            out["data"] = {"name": self.data.name, "n": self.data.n, "dim": self.data.dim}
        else:
            out["data"] = {
                "distribution": "unit_ball_margin",
                "dim": self.data.dim,
                "gamma_target": self.data.gamma_target,
                "direction": list(self.data.direction),
            }
            out["seed"] = self.seed
            out["holdout"] = self.holdout
        return out


@dataclass
class Trace:
    """Recorded rows plus run-level results."""

    columns: Dict[str, np.ndarray]
    cum_risk: np.ndarray
    hitting_times: Dict[float, Optional[int]]
    final_w: np.ndarray
    config: dict
    certificate: Optional[MarginCertificate]
    diverged: bool = False
    message: str = ""

    def __getitem__(self, key) -> np.ndarray:
        return self.columns[key]

    def __len__(self) -> int:
        return len(self.columns["t"])

    @property
    def steps_run(self) -> int:
        return int(self.columns["t"][-1]) if len(self) else 0

    def meta(self) -> dict:
        return {
            "config": self.config,
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "hitting_times": {repr(k): v for k, v in self.hitting_times.items()},
            "final_w": [float(v) for v in self.final_w],
            "diverged": self.diverged,
            "message": self.message,
            "rows": len(self),
        }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_COLUMNS)
            cols = [self.columns[c] for c in TRACE_COLUMNS]
            for row in zip(*cols):
                writer.writerow([_cell(name, v) for name, v in zip(TRACE_COLUMNS, row)])

    def save(self, directory, stem: str = "trace") -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / f"{stem}.csv"
        self.to_csv(path)
        (directory / f"{stem}.meta.json").write_text(json.dumps(self.meta(), indent=2, sort_keys=True))
        return path

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return (
            all(np.array_equal(self.columns[c], other.columns[c], equal_nan=True) for c in TRACE_COLUMNS)
            and np.array_equal(self.final_w, other.final_w)
            and self.hitting_times == other.hitting_times
        )


def _cell(name, v):
    if name == "t":
        return int(v)
    if isinstance(v, float) and math.isnan(v):
        return ""
    return repr(float(v))


# ---------------------------------------------------------------------------
# risk, gradient, curvature


def _check_dim(dataset: Dataset, w) -> np.ndarray:
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.shape[0] != dataset.dim:
        raise ConfigurationError(f"w has dimension {w.shape[0]}, data has {dataset.dim}")
    return w


def risk(loss: FyLoss, dataset: Dataset, w) -> float:
    w = _check_dim(dataset, w)
    return float(np.mean(loss.pair(dataset.z @ w)[0]))


def risk_grad(loss: FyLoss, dataset: Dataset, w) -> np.ndarray:
    w = _check_dim(dataset, w)
    gz = loss.pair(dataset.z @ w)[1]
    return -(gz @ dataset.z) / dataset.n


def _power_top(apply, dim: int, iters: int = 200, rtol: float = 1e-10) -> float:
    v = np.ones(dim) / math.sqrt(dim) + 1e-3 * np.arange(dim)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        hv = apply(v)
        new = float(np.linalg.norm(hv))
        if new == 0.0:
            return 0.0
        v = hv / new
        if abs(new - lam) <= rtol * new:
            return new
        lam = new
    return lam


def _sharpness_from_curv(z: np.ndarray, curv: np.ndarray) -> float:
    n = z.shape[0]
    return _power_top(lambda v: z.T @ (curv * (z @ v)) / n, z.shape[1])


def sharpness(loss: FyLoss, dataset: Dataset, w) -> float:
    """Largest Hessian eigenvalue of the risk by power iteration."""
    if not loss.smooth:
        raise UnsupportedOperation("sharpness needs a smooth loss")
    w = _check_dim(dataset, w)
    curv = np.asarray(loss.curvature(dataset.z @ w), dtype=float).reshape(-1)
    return _sharpness_from_curv(dataset.z, curv)


# ---------------------------------------------------------------------------
# runners


class _Recorder:
    def __init__(self, cfg: RunConfig, certificate: Optional[MarginCertificate]):
        self.cfg = cfg
        self.rows: Dict[str, List[float]] = {c: [] for c in TRACE_COLUMNS}
        self.cum_risk_rows: List[float] = []
        self.w_star = None if certificate is None else certificate.w_star
        self.hits: Dict[float, Optional[int]] = {e: None for e in cfg.eps_grid}
        self.pending = list(cfg.eps_grid)
        self.min_risk = math.inf
        self.cum_g = 0.0
        self.cum_risk = 0.0
        self.recorded = 0

    def observe(self, t: int, risk_value: float):
        if risk_value < self.min_risk:
            self.min_risk = risk_value
        while self.pending and risk_value <= self.pending[0]:
            self.hits[self.pending.pop(0)] = t

    def record(self, t, w, risk_value, grad_norm, g_pot, min_margin, sharp):
        r = self.rows
        r["t"].append(t)
        r["risk"].append(risk_value)
        r["min_risk"].append(self.min_risk)
        r["grad_norm"].append(grad_norm)
        r["w_norm"].append(float(np.linalg.norm(w)))
        r["alignment"].append(math.nan if self.w_star is None else float(w @ self.w_star))
        r["g_potential"].append(g_pot)
        r["cum_g"].append(self.cum_g)
        r["sharpness"].append(sharp)
        r["min_margin"].append(min_margin)
        self.cum_risk_rows.append(self.cum_risk)
        self.recorded += 1

    def want_sharpness(self) -> bool:
        k = self.cfg.sharpness_every
        return k > 0 and self.recorded % k == 0

    def finish(self, w, certificate, diverged=False, message="") -> Trace:
        cols = {c: np.array(v, dtype=np.int64 if c == "t" else float) for c, v in self.rows.items()}
        return Trace(
            columns=cols,
            cum_risk=np.array(self.cum_risk_rows),
            hitting_times=dict(self.hits),
            final_w=np.array(w, dtype=float),
            config=self.cfg.to_dict(),
            certificate=certificate,
            diverged=diverged,
            message=message,
        )


def _resolve_certificate(cfg: RunConfig, certificate):
    if certificate is not None:
        return certificate
    if isinstance(cfg.data, SeparableDistribution):
        return MarginCertificate(cfg.data.unit, cfg.data.gamma_target, 0.0, 0)
    try:
        return margin_certificate(cfg.data)
    except NotSeparableError:
        return None


def _diverging(risk_value: float, w: np.ndarray) -> bool:
    if not math.isfinite(risk_value) or risk_value > RISK_CAP:
        return True
    nrm = float(np.linalg.norm(w))
    return not math.isfinite(nrm) or nrm > NORM_CAP


def gd_run(cfg: RunConfig, certificate: Optional[MarginCertificate] = None) -> Trace:
    """Fixed-stepsize gradient descent for ``cfg.steps`` steps."""
    if cfg.mode is not Mode.GD:
        raise ConfigurationError("gd_run needs mode=gd")
    certificate = _resolve_certificate(cfg, certificate)
    rec = _Recorder(cfg, certificate)
    z = cfg.data.z
    n = cfg.data.n
    eta = cfg.eta
    w = cfg.w0
    every = cfg.record_every
    smooth = cfg.loss.smooth
    for t in range(cfg.steps + 1):
        margins = z @ w
        lv, gv = cfg.loss.pair(margins)
        risk_value = float(lv.mean())
        if _diverging(risk_value, w):
            msg = f"diverged at step {t}: risk={risk_value:.3g}, |w|={np.linalg.norm(w):.3g}"
            raise DivergenceError(msg, rec.finish(w, certificate, True, msg))
        g_pot = float(gv.mean())
        grad = -(gv @ z) / n
        rec.observe(t, risk_value)
        if t % every == 0 or t == cfg.steps:
            sharp = math.nan
            if smooth and rec.want_sharpness():
                sharp = _sharpness_from_curv(z, cfg.loss._curvature_from_dual(gv))
            rec.record(t, w, risk_value, float(np.linalg.norm(grad)), g_pot, float(margins.min()), sharp)
        if t == cfg.steps:
            break
        rec.cum_g += g_pot
        rec.cum_risk += risk_value
        w = w - eta * grad
    return rec.finish(w, certificate)


def sgd_run(cfg: RunConfig, certificate: Optional[MarginCertificate] = None) -> Trace:
    """One fresh sample per step; the risk column is measured on a held-out panel.

    ``g_potential`` and ``cum_g`` refer to the sample drawn at each step, the
    quantities in the per-sample perceptron argument; ``cum_risk`` likewise
    sums the per-sample losses.
    """
    if cfg.mode is not Mode.SGD:
        raise ConfigurationError("sgd_run needs mode=sgd")
    certificate = _resolve_certificate(cfg, certificate)
    rec = _Recorder(cfg, certificate)
    dist = cfg.data
    rng = np.random.default_rng(cfg.seed)
    xs, ys = dist.sample(rng, cfg.steps)
    stream = xs * ys[:, None]
    hx, hy = dist.sample(rng, cfg.holdout)
    panel = hx * hy[:, None]
    eta = cfg.eta
    w = cfg.w0
    every = cfg.record_every
    smooth = cfg.loss.smooth
    for t in range(cfg.steps + 1):
        if t % every == 0 or t == cfg.steps:
            pm = panel @ w
            lv, gv = cfg.loss.pair(pm)
            risk_value = float(lv.mean())
            if _diverging(risk_value, w):
                msg = f"diverged at step {t}"
                raise DivergenceError(msg, rec.finish(w, certificate, True, msg))
            rec.observe(t, risk_value)
            grad = -(gv @ panel) / panel.shape[0]
            sharp = math.nan
            if smooth and rec.want_sharpness():
                sharp = _sharpness_from_curv(panel, cfg.loss._curvature_from_dual(gv))
            g_here = float(cfg.loss.pair(stream[t] @ w)[1]) if t < cfg.steps else math.nan
            rec.record(t, w, risk_value, float(np.linalg.norm(grad)), g_here, float(pm.min()), sharp)
        if t == cfg.steps:
            break
        zt = stream[t]
        mt = float(zt @ w)
        lt, gt = cfg.loss.pair(mt)
        lt, gt = float(lt), float(gt)
        rec.cum_g += gt
        rec.cum_risk += lt
        w = w + (eta * gt) * zt
    return rec.finish(w, certificate)


def run(cfg: RunConfig, certificate: Optional[MarginCertificate] = None) -> Trace:
    return gd_run(cfg, certificate) if cfg.mode is Mode.GD else sgd_run(cfg, certificate)


# ---------------------------------------------------------------------------
# phase detection


@dataclass
class PhaseReport:
    applicable: bool
    s: Optional[int] = None
    threshold: Optional[float] = None
    monotone_after_s: bool = True
    all_correct_at_s: bool = True
    stable_rate_ok: bool = True
    worst_monotone_increase: float = 0.0
    worst_rate_ratio: float = 0.0
    psi_note: List[List[float]] = field(default_factory=list)
    note: str = ""

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def phase_detect(
    trace: Trace,
    analysis: LossAnalysis,
    loss: FyLoss,
    dataset: Dataset,
    eta: float,
    gamma: Optional[float] = None,
) -> PhaseReport:
    """Locate the stable-phase entry step and test the stable-phase claims.

    The entry step is the first recorded t with
    ``L(w_t) <= min(1 / (4 C_beta^2 eta), loss(0) / n)``. After it the risk
    must not increase (slack 1e-12), every point must be correctly
    classified at entry, and ``L(w_{s+t}) <= 5 rho(gamma^2 eta t) /
    (gamma^2 eta t)`` must hold.
    """
    sb = analysis.self_bounding
    if sb is None or not sb.self_bounding:
        return PhaseReport(False, note="not applicable (no self-bounding constant)")
    if gamma is None:
        if trace.certificate is None:
            raise ConfigurationError("phase detection needs the data margin")
        gamma = trace.certificate.gamma
    c_beta = sb.c_beta_hat
    threshold = min(1.0 / (4 * c_beta**2 * eta), float(loss.value(0.0)) / dataset.n)
    ts = trace["t"]
    risks = trace["risk"]
    hit = np.flatnonzero(risks <= threshold)
    lam_grid = np.geomspace(1.0, 1e6, 7)
    psi = [[float(l), float(l / r)] for l, r in zip(lam_grid, np.atleast_1d(rho(loss, lam_grid)))]
    if hit.size == 0:
        return PhaseReport(True, None, threshold, psi_note=psi, note="insufficient horizon")
    i = int(hit[0])
    s = int(ts[i])
    after = risks[i:]
    increases = np.diff(after)
    worst_inc = float(increases.max()) if increases.size else 0.0
    monotone = bool(np.all(increases <= 1e-12))
    correct = bool(trace["min_margin"][i] >= 0)
    dt = (ts[i + 1:] - s).astype(float)
    lam = gamma**2 * eta * dt
    if lam.size:
        bound = 5 * np.atleast_1d(rho(loss, lam)) / lam
        ratio = risks[i + 1:] / bound
        worst_ratio = float(ratio.max())
        rate_ok = bool(np.all(risks[i + 1:] <= bound * (1 + 1e-9) + 1e-12))
    else:
        worst_ratio, rate_ok = 0.0, True
    note = "" if trace.config.get("record_every", 1) == 1 else "checked on recorded rows only"
    return PhaseReport(True, s, threshold, monotone, correct, rate_ok, worst_inc, worst_ratio, psi, note)


# ---------------------------------------------------------------------------
# SGD constants


@dataclass(frozen=True)
class SgdBound:
    """Constants of the high-probability SGD guarantee, logged not asserted."""

    loss_cap: float
    t_concentration: float
    n_blocks: float
    delta: float
    eps: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def sgd_bound(analysis: LossAnalysis, loss: FyLoss, gamma: float, eta: float, eps: float, delta: float) -> SgdBound:
    """``M = loss(-(4m + eta C_g)/gamma)``, the block length ``t°`` and count ``N``."""
    if analysis.margin is None:
        raise ConfigurationError("SGD constants are defined for margin losses")
    m, cg = analysis.margin, analysis.c_g
    cap = float(loss.value(-(4 * m + eta * cg) / gamma))
    log_term = math.log(1.0 / delta)
    t0 = max(32 * cap**2 * log_term / eps**2, 8 * cap * log_term / eps)
    blocks = 2**analysis.alpha / (analysis.c_phi * gamma**2) * (4 * m / eta + cg) * eps ** (-analysis.alpha)
    return SgdBound(cap, t0, blocks, delta, eps)
