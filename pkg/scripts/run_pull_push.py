"""Run the pull-push benchmark and print the headline numbers.

    python scripts/run_pull_push.py [--out results/pull_push] [--tau 0.012]
"""

import argparse
import json
from pathlib import Path

from delam.cli import run_benchmark
from delam.config import pull_push


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results/pull_push")
    ap.add_argument("--tau", type=float, default=None, help="override the time step (s)")
    args = ap.parse_args()
    cfg = pull_push()
    if args.tau is not None:
        cfg.discretisation.tau_s = args.tau
    s = run_benchmark(cfg, Path(args.out))
    keys = ("n_steps", "debond_step", "debond_time", "energy", "amdp", "mixity", "qp", "runtime_s")
    print(json.dumps({k: s[k] for k in keys}, indent=2))


if __name__ == "__main__":
    main()
