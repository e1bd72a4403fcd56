"""Monte Carlo study of the plug-in and Whittle λ estimators over (T, n, H) grids.

Writes one estimate table and one normality p-value table per H, as CSV and
aligned text, plus a combined JSON.  The H=0.3 grid is informational only.

    python scripts/estimator_study.py --out-dir results/study --replications 100
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from foukit.cli import main as cli_main


def parse_args(argv=None):
    here = os.path.dirname(os.path.abspath(__file__))
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--config", default=os.path.join(here, "configs", "estimator_study.json"))
    parser.add_argument("--out-dir", default="results/estimator_study")
    parser.add_argument("--replications", type=int, default=None, help="override the config's replication count")
    parser.add_argument("--plugin-only", action="store_true", help="skip the Whittle estimator")
    parser.add_argument("--workers", type=int, default=None)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    with open(args.config) as fh:
        config = json.load(fh)
    if args.replications is not None:
        config["replications"] = args.replications
    if args.plugin_only:
        config["estimators"] = ["plugin"]
    os.makedirs(args.out_dir, exist_ok=True)
    resolved = os.path.join(args.out_dir, "config.json")
    with open(resolved, "w") as fh:
        json.dump(config, fh, indent=2)
    start = time.perf_counter()
    argv_mc = ["mc", resolved, "--out-dir", args.out_dir]
    if args.workers is not None:
        argv_mc += ["--workers", str(args.workers)]
    code = cli_main(argv_mc)
    if code == 0:
        for table in config["tables"]:
            with open(os.path.join(args.out_dir, f"{table['name']}.txt")) as fh:
                print(f"== {table['name']} ==")
                print(fh.read())
        print(f"finished in {time.perf_counter() - start:.1f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
