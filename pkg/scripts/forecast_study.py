"""Filter choice versus one-step forecast accuracy on simulated series.

Simulates standardized FOU(λ^(p), H) series, fits with binomial filters of
increasing order and σ fixed to 1, and scores the last ``m`` one-step
predictions against the naive last-value predictor.

    python scripts/forecast_study.py --replications 20 --m 30 60
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from foukit.errors import FouError
from foukit.estimate import FitConfig, fit
from foukit.filters import binomial_filter
from foukit.forecast import ForecastTask, mae, naive_predictions, one_step_predictions
from foukit.model import FouSpec
from foukit.simulate import SimulationPlan, path_standardize, simulate_fou


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--lam", type=float, default=0.8)
    parser.add_argument("--p", type=int, default=2)
    parser.add_argument("--hurst", type=float, default=0.7)
    parser.add_argument("--n", type=int, default=304)
    parser.add_argument("--horizon", type=float, default=10.0)
    parser.add_argument("--filters", type=int, nargs="+", default=[2, 4, 8, 16, 26])
    parser.add_argument("--m", type=int, nargs="+", default=[30, 60])
    parser.add_argument("--replications", type=int, default=20)
    parser.add_argument("--seed", type=int, default=1)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    truth = FouSpec.single(args.lam, args.p, 1.0, args.hurst)
    delta = args.horizon / args.n
    scores = {(k, m): [] for k in args.filters for m in args.m}
    naive = {m: [] for m in args.m}
    failures = 0
    for r in range(args.replications):
        path = simulate_fou(SimulationPlan(truth, args.n, delta, seed=args.seed + r))
        z = path_standardize(path)
        for m in args.m:
            naive[m].append(mae(path.values[-m:], naive_predictions(path, m)))
        for k in args.filters:
            try:
                rep = fit(path, FitConfig(filter=binomial_filter(k), p=args.p, standardize=True, assume_unit_sigma=True))
                if rep.spec_hat is None:
                    raise FouError("H estimate outside (0, 1)")
                for m in args.m:
                    preds = one_step_predictions(ForecastTask(rep.spec_hat, z, m))
                    scores[(k, m)].append(mae(path.values[-m:], preds))
            except FouError:
                failures += 1
                for m in args.m:
                    scores[(k, m)].append(np.nan)
    header = ["filter"] + [f"MAE m={m}" for m in args.m]
    print("  ".join(f"{h:>12}" for h in header))
    for k in args.filters:
        cells = [f"{np.nanmean(scores[(k, m)]):12.5f}" for m in args.m]
        print(f"{'binomial:' + str(k):>12}  " + "  ".join(cells))
    print(f"{'naive':>12}  " + "  ".join(f"{np.mean(naive[m]):12.5f}" for m in args.m))
    if failures:
        print(f"{failures} fits failed and were skipped", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
