"""Data for the pilot-set figures: risk and parameter norm along GD.

Writes one wide CSV per quantity (``risk.csv``, ``norm.csv``) with a column
per (loss, stepsize) run, ready for any plotting tool.
"""
import argparse
import csv
import warnings
from pathlib import Path

from fylab.cli import parse_loss
from fylab.data import NormWarning, margin_certificate, pilot_dataset
from fylab.descent import RunConfig, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="figures")
    ap.add_argument("--steps", type=int, default=10**4)
    ap.add_argument("--loss", action="append", default=None)
    ap.add_argument("--eta", type=float, action="append", default=None)
    args = ap.parse_args()
    losses = args.loss or ["logistic", "tsallis-2", "tsallis-1.5"]
    etas = args.eta or [1.0, 4.0, 16.0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NormWarning)
        ds = pilot_dataset()
    cert = margin_certificate(ds)
    cols = {}
    for spec in losses:
        l = parse_loss(spec)
        for eta in etas:
            tr = run(RunConfig(l, ds, eta, args.steps), cert)
            key = f"{l.name}_eta{eta:g}"
            cols[key] = tr
            print(f"{key:<22} min risk {tr['min_risk'][-1]:.3e}  sup norm {tr['w_norm'].max():.4g}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t = next(iter(cols.values()))["t"]
    for qty, fname in (("risk", "risk.csv"), ("w_norm", "norm.csv")):
        with open(out / fname, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", *cols])
            for i, ti in enumerate(t):
                w.writerow([int(ti), *(repr(float(tr[qty][i])) for tr in cols.values())])
    print(f"wrote {out / 'risk.csv'} and {out / 'norm.csv'}")


if __name__ == "__main__":
    main()
