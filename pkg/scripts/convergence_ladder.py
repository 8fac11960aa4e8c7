"""Nested (tau, h) ladder on the pull-push benchmark with tau/h fixed.

    python scripts/convergence_ladder.py [--levels 3] [--out results/ladder]
"""

import argparse
import json
from pathlib import Path

from delam.cli import convergence_study
from delam.config import pull_push


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--levels", type=int, default=3)
    ap.add_argument("--out", default="results/ladder")
    args = ap.parse_args()
    res = convergence_study(pull_push(), args.levels, Path(args.out))
    d = res["sup_diff_smooth"]
    res["reduction_smooth"] = [a / b for a, b in zip(d[:-1], d[1:])]
    print(json.dumps(res, indent=2))


if __name__ == "__main__":
    main()
