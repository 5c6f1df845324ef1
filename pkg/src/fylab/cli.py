"""Command line entry point: ``fylab analyze|pilot|rates|verify``.

Every command writes into ``<out>/<command>/<label or timestamp>/`` with a
``meta.json`` sidecar echoing the full configuration. Exit codes: 0 ok,
1 a check failed, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .data import NormWarning, load_csv, margin_certificate, pilot_dataset
from .descent import DEFAULT_EPS_GRID, RunConfig, run
from .errors import DivergenceError, FyLabError
from .fenchel import FyLoss, analyze, make_loss
from .verify import check_rate_fit, rate_fit, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

PILOT_LOSSES = ("logistic", "tsallis-1.5", "tsallis-2", "tsallis-0.5")
PILOT_ETAS = (1.0, 4.0, 16.0)


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    command: str
    out: str
    label: Optional[str]
    seed: int
    threads: int
    record_every: Optional[int]
    settings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["version"] = __version__
        return d


def parse_loss(text: str, q: Optional[float] = None) -> FyLoss:
    """``tsallis``, ``tsallis-1.5`` or ``tsallis:1.5``; ``q`` overrides the suffix."""
    spec = text.replace(":", "-")
    head, sep, tail = spec.rpartition("-")
    try:
        suffix = float(tail) if sep else None
    except ValueError:
        suffix = None
    name = head if suffix is not None else spec
    return make_loss(name, suffix if q is None else q)


def _out_root(args) -> Path:
    base = args.out or os.environ.get("FYLAB_OUT") or "runs"
    stamp = args.label or time.strftime("%Y%m%d-%H%M%S")
    path = Path(base) / args.command / stamp
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _config(args, **settings) -> ExperimentConfig:
    return ExperimentConfig(
        command=args.command,
        out=str(args.out or os.environ.get("FYLAB_OUT") or "runs"),
        label=args.label,
        seed=args.seed,
        threads=args.threads,
        record_every=args.record_every,
        settings=settings,
    )


def _dataset(path: Optional[str]):
    if path:
        return load_csv(path)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NormWarning)
        return pilot_dataset()


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(args) -> int:
    l = parse_loss(args.loss, args.q)
    a = analyze(l, eps_bar=args.eps_bar)
    out = _out_root(args)
    cfg = _config(args, loss=l.to_config(), eps_bar=args.eps_bar)
    body = a.to_dict()
    _write_json(out / "analysis.json", body)
    _write_json(out / "meta.json", cfg.to_dict())
    with open(out / "rho.csv", "w") as fh:
        fh.write("lambda,rho\n")
        for lam, r in a.rho_samples:
            fh.write(f"{lam!r},{r!r}\n")
    print(json.dumps(body, indent=2, sort_keys=True))
    return EXIT_OK


def _summary(trace, l: FyLoss, eta: float, gamma: float) -> dict:
    norms = trace["w_norm"]
    ts = trace["t"]
    tail = ts >= 0.9 * ts[-1]
    summary = {
        "loss": l.name,
        "eta": eta,
        "steps": int(ts[-1]),
        "final_risk": float(trace["risk"][-1]),
        "min_risk": float(trace["min_risk"][-1]),
        "sup_norm": float(norms.max()),
        "last_decade_norm_increase": float(norms[-1] - norms[tail][0]),
        "hitting_times": {repr(k): v for k, v in trace.hitting_times.items()},
    }
    if l.margin is not None:
        summary["norm_bound"] = (4 * l.margin + eta) / gamma
    return summary


def cmd_pilot(args) -> int:
    specs = args.loss or list(PILOT_LOSSES)
    losses = [parse_loss(s, args.q if len(specs) == 1 else None) for s in specs]
    etas = args.eta or list(PILOT_ETAS)
    ds = _dataset(args.data)
    cert = margin_certificate(ds)
    out = _out_root(args)
    jobs = [(l, float(eta)) for l in losses for eta in etas]

    def one(job):
        l, eta = job
        cfg = RunConfig(l, ds, eta, args.steps, record_every=args.record_every,
                        sharpness_every=args.sharpness_every, eps_grid=tuple(args.eps or DEFAULT_EPS_GRID))
        trace = run(cfg, cert)
        trace.save(out, f"{l.name}_eta{eta:g}")
        return _summary(trace, l, eta, cert.gamma)

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        rows = list(pool.map(one, jobs))
    rows.sort(key=lambda r: (r["loss"], r["eta"]))
    _write_json(out / "summary.json", {"dataset": ds.name, "certificate": cert.to_dict(), "runs": rows})
    cfg = _config(args, losses=[l.to_config() for l in losses], etas=[float(e) for e in etas],
                  steps=args.steps, data=args.data or "pilot")
    _write_json(out / "meta.json", cfg.to_dict())
    for r in rows:
        print(f"{r['loss']:>16} eta={r['eta']:<5g} min_risk={r['min_risk']:.3e} sup_norm={r['sup_norm']:.4g}")
    return EXIT_OK


def cmd_rates(args) -> int:
    if not args.eps:
        raise UsageError("rates needs at least one tolerance (--eps)")
    l = parse_loss(args.loss or "tsallis-2", args.q)
    eta = float(args.eta[0]) if args.eta else 16.0
    ds = _dataset(args.data)
    fit = rate_fit(l, ds, eta, args.eps, steps=args.steps)
    rep = check_rate_fit(fit, f"{l.name}/eta={eta:g}")
    out = _out_root(args)
    _write_json(out / "ratefit.json", {**fit.to_dict(), "checks": rep.to_dict()})
    cfg = _config(args, loss=l.to_config(), eta=eta, eps=list(args.eps), steps=args.steps,
                  data=args.data or "pilot")
    _write_json(out / "meta.json", cfg.to_dict())
    print(rep.table())
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_verify(args) -> int:
    rep = run_suite(args.scope, threads=args.threads, seed=args.seed)
    out = _out_root(args)
    _write_json(out / "report.json", rep.to_dict())
    _write_json(out / "meta.json", _config(args, scope=args.scope).to_dict())
    print(rep.table())
    return EXIT_OK if rep.ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output root (default $FYLAB_OUT or ./runs)")
    common.add_argument("--label", default=None, help="run directory name instead of a timestamp")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=_positive_int, default=1)
    common.add_argument("--record-every", type=_positive_int, default=None)

    loss_opts = argparse.ArgumentParser(add_help=False)
    loss_opts.add_argument("--q", type=float, default=None, help="family parameter")

    parser = argparse.ArgumentParser(prog="fylab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common, loss_opts], help="derived constants of one loss")
    p.add_argument("--loss", required=True)
    p.add_argument("--eps-bar", type=float, default=1e-2)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("pilot", parents=[common, loss_opts], help="GD sweep on the pilot set")
    p.add_argument("--loss", action="append", help="repeatable; e.g. tsallis-1.5")
    p.add_argument("--eta", type=_positive_float, action="append")
    p.add_argument("--steps", type=_positive_int, default=10**4)
    p.add_argument("--eps", type=_positive_float, nargs="+", default=None)
    p.add_argument("--sharpness-every", type=int, default=0)
    p.add_argument("--data", default=None, help="CSV dataset instead of the pilot set")
    p.set_defaults(func=cmd_pilot)

    p = sub.add_parser("rates", parents=[common, loss_opts], help="hitting times against the bound")
    p.add_argument("--loss", default=None)
    p.add_argument("--eta", type=_positive_float, action="append")
    p.add_argument("--eps", type=_positive_float, nargs="+", required=True)
    p.add_argument("--steps", type=_positive_int, default=10**4)
    p.add_argument("--data", default=None)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("verify", parents=[common], help="run the check suites")
    p.add_argument("scope", choices=("fast", "full"))
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"fylab {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (UsageError, FyLabError, ValueError) as exc:
        print(f"fylab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
