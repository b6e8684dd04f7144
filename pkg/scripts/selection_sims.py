"""Rank and cluster-count selection by thinning-based cross-validation."""

import argparse
from pathlib import Path

from thinlab import fileio
from thinlab import simulations as SIM


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--task", choices=SIM.TASKS, nargs="+", default=list(SIM.TASKS))
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("results/selection"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for i, task in enumerate(args.task):
        cfg = SIM.SelectionSimConfig(task=task, n_reps=args.reps, seed=args.seed + i)
        rep = SIM.run_selection_sim(cfg)
        fileio.write_report(rep, args.out / f"{task}.json")
        for key, m in rep.metrics.items():
            print(f"{task:12s} {key:18s} correct {m['proportion_correct']:.3f} monotone {m['monotone_fraction']:.3f}")


if __name__ == "__main__":
    main()
