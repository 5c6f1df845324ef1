"""One-sample SGD seed ensemble with Tsallis 2 on synthetic separable data."""
import argparse
import json

from fylab.verify import sgd_ensemble


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--steps", type=int, default=10**5)
    ap.add_argument("--eta", type=float, default=4.0)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    rep, log = sgd_ensemble(seeds=tuple(range(args.seeds)), steps=args.steps, eta=args.eta, threads=args.threads)
    print(rep.table())
    print(json.dumps(log["constants"], indent=2))


if __name__ == "__main__":
    main()
