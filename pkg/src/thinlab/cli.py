"""``thinlab`` command line: thin, multithin, diagnose, cv, simulate."""
from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

import numpy as np

from . import diagnostics as D
from . import fileio
from . import selection as SEL
from . import simulations as SIM
from . import thinning as T
from .rng import RandomStream

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

EXPERIMENTS = {
    "split-iid": "iid",
    "split-leverage": "high_leverage",
    "pca": "binomial_pca",
    "gamma-small": "gamma_small",
    "gamma-large": "gamma_large",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise T.UsageError(f"{self.prog}: {message}")


def _floats(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise T.UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _matrix_arg(text: str):
    """``"1,0.5;0.5,1"`` -> nested tuple."""
    return tuple(tuple(_floats(row)) for row in text.split(";"))


def _add_family_args(p, choices):
    p.add_argument("--family", required=True, choices=choices)
    p.add_argument("--var", type=float, help="gaussian variance")
    p.add_argument("--cov", type=_matrix_arg, help="mvgaussian covariance, rows separated by ';'")
    p.add_argument("--size", type=float, help="negative binomial size")
    p.add_argument("--shape", type=float, help="gamma shape")
    p.add_argument("--trials", type=int, help="binomial / multinomial trials")


def _need(args, name):
    v = getattr(args, name)
    if v is None:
        raise T.UsageError(f"--family {args.family} needs --{name}")
    return v


def _family(args, dims=None) -> T.Family:
    f = args.family
    if f == "poisson":
        return T.Poisson()
    if f == "exponential":
        return T.Exponential()
    if f == "gaussian":
        return T.Gaussian(_need(args, "var"))
    if f == "mvgaussian":
        return T.MultivariateGaussian(_need(args, "cov"))
    if f == "negbin":
        return T.NegativeBinomial(_need(args, "size"))
    if f == "gamma":
        return T.Gamma(_need(args, "shape"))
    if f == "binomial":
        return T.Binomial(_need(args, "trials"))
    if f == "multinomial":
        return T.Multinomial(_need(args, "trials"), dims)
    raise T.UsageError(f"unknown family {f!r}")


def _input_kind(family_name: str) -> str:
    return "count" if family_name in ("poisson", "negbin", "binomial", "multinomial") else "real"


def _provenance(argv, args, extra=None) -> dict:
    out = {"command": args.command, "argv": list(argv), "seed": args.seed}
    if getattr(args, "inp", None):
        out["input"] = {"path": args.inp, "sha256": fileio.sha256_file(args.inp)}
    out.update(extra or {})
    return out


# ---------------------------------------------------------------------------
# subcommands


def _cmd_thin(args, argv, plan: T.ThinPlan):
    X = fileio.read_matrix(args.inp, _input_kind(args.family))
    family = _family(args, dims=X.shape[1])
    mode = "rowwise" if family.multivariate else "elementwise"
    fs = T.thin_dataset(X, family, plan, mode, RandomStream(args.seed))
    outputs = []
    for m in range(1, len(fs) + 1):
        path = f"{args.out}.fold{m}.csv"
        fileio.write_matrix(fs[m - 1], path)
        outputs.append(path)
    manifest = _provenance(
        argv, args, {"family": family.to_dict(), "plan": list(plan.epsilons), "mode": mode, "outputs": outputs}
    )
    fileio.write_report(manifest, f"{args.out}.manifest.json")


def _cmd_diagnose(args, argv):
    if args.true is None or len(args.true) != 2:
        raise T.UsageError("--true needs two values")
    spec = D.MismatchSpec(args.family, tuple(args.true), 1.0, args.eps)
    grid = args.grid if args.grid else D.default_grid(spec.true_nuisance(), args.points)
    rows = D.mismatch_sweep(spec, grid, args.reps, RandomStream(args.seed))
    fileio.write_report(rows, f"{args.out}.csv")
    fileio.write_report(_provenance(argv, args, {"spec": {"family": spec.family, "true": list(spec.true), "epsilon": spec.epsilon}}), f"{args.out}.manifest.json")


def _method_from_args(args) -> SEL.Method:
    if args.method == "single":
        return SEL.Method("single", eps_train=_need(args, "eps"))
    if args.method == "multifold":
        return SEL.Method("multifold", folds=args.folds)
    return SEL.Method("naive")


def _cmd_cv(args, argv):
    if args.family not in ("binomial", "gamma"):
        raise T.UsageError("cv supports --family binomial or gamma")
    if args.kmin < 1 or args.kmax < args.kmin:
        raise T.UsageError("need 1 <= --kmin <= --kmax")
    method = _method_from_args(args)
    X = fileio.read_matrix(args.inp, _input_kind(args.family))
    family = _family(args)
    task = "pca" if args.family == "binomial" else "cluster"
    curve = SEL.cv_select_k(
        X, family, range(args.kmin, args.kmax + 1), method, args.loss, task, RandomStream(args.seed), restarts=args.restarts
    )
    fileio.write_report(curve, f"{args.out}.curve.csv")
    summary = _provenance(
        argv,
        args,
        {
            "family": family.to_dict(),
            "task": task,
            "method": str(method),
            "loss": args.loss,
            "candidates": curve.candidate_ks,
            "mean_loss": curve.mean_loss,
            "selected_k": curve.selected_k,
        },
    )
    fileio.write_report(summary, f"{args.out}.summary.json")


def _slug(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9.]+", "-", label).strip("-")


def _cmd_simulate(args, argv):
    losses = ("nll", "mse") if args.loss == "both" else (args.loss,)
    kind = EXPERIMENTS[args.experiment]
    stream = RandomStream(args.seed)
    if args.experiment.startswith("split-"):
        default_grid = (0.2, 0.8) if kind == "iid" else (0.5, 0.8)
        metrics, configs = {}, []
        for eps in args.eps_grid or default_grid:
            cfg = SIM.RegressionSimConfig.for_scenario(kind, eps=eps, n_reps=args.reps, beta_star=args.beta_star)
            rep = SIM.run_split_comparison(cfg, stream)
            metrics.update(rep.metrics)
            configs.append(rep.config)
        report = SIM.SimReport(args.experiment, args.seed, args.reps, {"runs": configs}, metrics)
        rows = [{"arm": a.split(":")[0], "eps": float(a.split(":")[1]), **m} for a, m in metrics.items()]
        fileio.write_report(rows, f"{args.out}.metrics.csv")
    else:
        if args.eps_grid:
            methods = tuple(f"single:{e:g}" for e in args.eps_grid)
        else:
            methods = SIM.SelectionSimConfig.__dataclass_fields__["methods"].default
        cfg = SIM.SelectionSimConfig(task=kind, methods=methods, losses=losses, n_reps=args.reps, seed=args.seed)
        report = SIM.run_selection_sim(cfg, stream)
        for arm, m in report.metrics.items():
            ks = m["candidates"]
            fileio.write_report({"K": ks, "mean_rescaled_loss": m["mean_rescaled_curve"], "mean_loss": m["mean_loss_curve"]}, f"{args.out}.curve.{_slug(arm)}.csv")
            fileio.write_report({"K": ks, "count": m["histogram"]}, f"{args.out}.hist.{_slug(arm)}.csv")
    out = report.to_dict()
    out["provenance"] = _provenance(argv, args)
    fileio.write_report(out, f"{args.out}.report.json")


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="thinlab", description="Data thinning and thinning-based validation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name in ("thin", "multithin"):
        p = sub.add_parser(name, help=f"{'two-fold' if name == 'thin' else 'multifold'} thinning of a CSV matrix")
        _add_family_args(p, sorted(T.FAMILIES))
        if name == "thin":
            p.add_argument("--eps", type=float, required=True, help="weight of fold 1")
        else:
            g = p.add_mutually_exclusive_group(required=True)
            g.add_argument("--eps", type=_floats, help="comma-separated fold weights")
            g.add_argument("--folds", type=int, help="number of equal-weight folds")
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--in", dest="inp", required=True)
        p.add_argument("--out", required=True, help="output prefix")

    p = sub.add_parser("diagnose", help="fold correlation under a misspecified nuisance parameter")
    p.add_argument("--family", required=True, choices=["gaussian", "negbin", "gamma"])
    p.add_argument("--true", type=_floats, required=True, help="mean,var | size,prob | shape,rate")
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--grid", type=_floats, help="assumed nuisance values (default: 50-point grid)")
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output prefix")

    p = sub.add_parser("cv", help="select a rank or cluster count by thinning-based cross-validation")
    _add_family_args(p, ["binomial", "gamma"])
    p.add_argument("--method", choices=["naive", "single", "multifold"], default="multifold")
    p.add_argument("--eps", type=float, help="training weight for --method single")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--loss", choices=list(SEL.LOSS_KINDS), default="nll")
    p.add_argument("--kmin", type=int, default=1)
    p.add_argument("--kmax", type=int, default=10)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True, help="output prefix")

    p = sub.add_parser("simulate", help="run a simulation experiment")
    p.add_argument("--experiment", required=True, choices=list(EXPERIMENTS))
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--loss", choices=["nll", "mse", "both"], default="both")
    p.add_argument("--eps-grid", type=_floats)
    p.add_argument("--beta-star", type=float, default=SIM.RegressionSimConfig.beta_star)
    p.add_argument("--out", required=True, help="output prefix")
    return parser


def run_cli(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        if args.command == "thin":
            _cmd_thin(args, argv, T.ThinPlan.two(args.eps))
        elif args.command == "multithin":
            plan = T.ThinPlan(tuple(args.eps)) if args.eps else T.ThinPlan.equal(args.folds)
            _cmd_thin(args, argv, plan)
        elif args.command == "diagnose":
            _cmd_diagnose(args, argv)
        elif args.command == "cv":
            _cmd_cv(args, argv)
        else:
            _cmd_simulate(args, argv)
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except (T.UsageError, T.PlanError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - reported, not swallowed
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
