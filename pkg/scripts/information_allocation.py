"""Fisher information carried by each fold, thinning versus sample splitting."""

import argparse

import numpy as np

from thinlab import diagnostics as D

QUERIES = [
    ("poisson", "rate", {"rate": 3.0}),
    ("gaussian", "mean", {"var": 2.0}),
    ("gamma", "rate", {"shape": 2.0, "rate": 1.5}),
    ("binomial", "prob", {"trials": 20, "prob": 0.3}),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--eps", type=float, default=0.3)
    args = ap.parse_args()
    for family, parameter, params in QUERIES:
        info = D.fisher_allocation(D.FisherQuery(family, parameter, params, (args.eps, 1 - args.eps)))
        total = D.total_information(family, parameter, params)
        print(f"{family:9s} {parameter:5s} train {info[0]:.4f}  test {info[1]:.4f}  total {total:.4f}")
    # one high-leverage observation carries most of the information
    per_obs = np.ones(args.n)
    per_obs[-1] = args.n
    split = D.splitting_information(args.n, args.eps, per_obs)
    print(f"leverage design: thinning train/test {split['train_dt']:.1f}/{split['test_dt']:.1f}")
    if split["ss_error"]:
        print(f"splitting unavailable: {split['ss_error']}")
    else:
        print(f"leverage design: splitting train/test {split['train_ss']:.1f}/{split['test_ss']:.1f}")


if __name__ == "__main__":
    main()
