"""Paired comparison of truncation rules on one environment.

    python scripts/compare_truncation.py configs/gn_corrupted.yaml --rules none gn_consistency
"""
import argparse

import numpy as np

from belieftrap.config import config_from_dict, load_config
from belieftrap.experiment import run_rollouts


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--rules", nargs="+", default=["none", "gn_consistency", "random_beta"])
    ap.add_argument("--beta", type=float, default=0.3)
    ap.add_argument("--rollouts", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    base = load_config(args.config).to_dict()
    base.update(rollouts=args.rollouts, seed=args.seed)
    print(f"{'rule':>16} {'mean turns':>10} {'total turns':>11} {'cut rate':>8} "
          f"{'success':>7} {'success|kept':>12}")
    for kind in args.rules:
        rule = {**base["truncation"], "kind": kind, "k": None}
        if kind == "random_beta":
            rule["beta"] = args.beta
        recs = run_rollouts(config_from_dict({**base, "truncation": rule}))
        kept = [r for r in recs if not r.truncated]
        turns = [r.n_turns for r in recs]
        kept_rate = np.mean([r.success for r in kept]) if kept else float("nan")
        print(f"{kind:>16} {np.mean(turns):10.3f} {sum(turns):11d} "
              f"{np.mean([r.truncated for r in recs]):8.3f} "
              f"{np.mean([r.success for r in recs]):7.3f} {kept_rate:12.3f}")


if __name__ == "__main__":
    main()
