"""Hitting times against the iteration bound, with a log-log slope fit."""
import argparse
import json
import warnings

from fylab.cli import parse_loss
from fylab.data import NormWarning, pilot_dataset
from fylab.verify import rate_fit


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--loss", action="append", default=None)
    ap.add_argument("--eta", type=float, default=1.0)
    ap.add_argument("--steps", type=int, default=10**5)
    ap.add_argument("--eps", type=float, nargs="+", default=[1e-1, 1e-2, 1e-3, 1e-4, 1e-5])
    ap.add_argument("--json", default=None, help="also write all fits to this file")
    args = ap.parse_args()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NormWarning)
        ds = pilot_dataset()
    fits = {}
    for spec in args.loss or ["tsallis-2", "tsallis-1.5", "renyi-2", "gini"]:
        l = parse_loss(spec)
        fit = rate_fit(l, ds, args.eta, args.eps, steps=args.steps)
        fits[l.name] = fit.to_dict()
        slope = "n/a" if fit.fitted_slope is None else f"{fit.fitted_slope:.3f}"
        print(f"{l.name:<12} hits={fit.hitting_times} slope={slope} alpha={fit.theory_alpha:.3f} "
              f"within_bounds={fit.within_bounds}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(fits, fh, indent=2)


if __name__ == "__main__":
    main()
