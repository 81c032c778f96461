"""Command line entry point: ``cckp <subcommand>``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import bounds, ea, experiment, instance, oracle


def _write_or_print(text: str, path: str | None) -> None:
    if path:
        experiment.atomic_write(Path(path), text)
    else:
        sys.stdout.write(text)


def _model_from_args(args, n: int) -> instance.WeightModel:
    if args.model == "additive":
        return instance.UniformAdditive(args.delta)
    if args.model == "relative":
        return instance.UniformRelative(args.beta)
    if args.model == "normal":
        return instance.Normal(tuple([args.variance] * n))
    return instance.Deterministic()


def cmd_generate(args) -> int:
    det = instance.generate_instance(
        args.kind, args.n, args.seed, profit_shift=args.profit_shift, capacity=args.capacity
    )
    _write_or_print(instance.serialize_instance(det), args.output)
    return 0


def cmd_adapt(args) -> int:
    det = instance.load_instance(args.instance)
    model = _model_from_args(args, det.n)
    cc, report = instance.adapt_instance(det, args.gamma, model, args.alpha, name=Path(args.instance).stem)
    _write_or_print(json.dumps(cc.to_dict(), indent=2) + "\n", args.output)
    print(
        f"gamma={report.gamma} k={report.k} B={report.original_capacity} "
        f"B'={report.adapted_capacity:g}",
        file=sys.stderr,
    )
    return 0


def cmd_solve(args) -> int:
    cc = instance.load_cc_instance(args.instance)
    if args.alpha is not None:
        cc = cc.with_alpha(args.alpha)
    cfg = ea.RunConfig(
        budget=args.budget,
        seed=args.seed,
        method=args.method,
        objective="single" if args.algorithm == "ea" else "multi",
        trace_stride=args.trace_stride,
    )
    result = ea.run(cc, cfg)
    print(json.dumps(result.to_dict(), indent=2))
    return 0


def cmd_experiment(args) -> int:
    cfg = experiment.ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.master_seed = args.seed
    env_dir = os.environ.get(experiment.OUTPUT_DIR_ENV)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    elif env_dir:
        cfg.output_dir = env_dir
    table = experiment.run_matrix(
        cfg, base_dir=Path(args.config).parent, workers=args.workers, resume=not args.fresh
    )
    for name, err in table.errors.items():
        print(f"instance {name} failed: {err}", file=sys.stderr)
    print(f"wrote {cfg.output_dir}/raw.jsonl and {cfg.output_dir}/table.csv ({len(table.rows)} rows)")
    return 1 if table.errors else 0


def cmd_verify(args) -> int:
    cc = instance.load_cc_instance(args.instance)
    x = ea.bits_from_str(args.solution)
    report = {"weight_stats": vars(instance.weight_stats(cc, x)), "profit": instance.profit(cc, x)}
    for method in bounds.BoundMethod:
        if bounds.admissible(method, cc.model):
            report[method.value] = bounds.violation_bound(cc, x, method)
    mc = oracle.mc_violation(cc, x, samples=args.samples, seed=args.seed)
    report["monte_carlo"] = vars(mc)
    margin = args.sigmas * mc.std_error
    report["bounds_valid"] = all(
        mc.p_hat <= report[m.value] + margin for m in bounds.BoundMethod if m.value in report
    )
    if args.exhaustive:
        for method in bounds.BoundMethod:
            if bounds.admissible(method, cc.model):
                bits, best = oracle.exhaustive_optimum(cc, method)
                report[f"exhaustive_{method.value}"] = {"bits": ea.bits_to_str(bits), "profit": best}
    print(json.dumps(report, indent=2))
    return 0 if report["bounds_valid"] else 1


def cmd_figures(args) -> int:
    if args.which == "fig1":
        grid = np.linspace(args.e_min, args.e_max, args.points)
        _write_or_print(experiment.emit_fig1(args.eps, grid), args.output)
        return 0
    with open(args.table, encoding="utf-8") as fh:
        table = experiment.read_table_csv(fh.read())
    _write_or_print(experiment.emit_fig2(table, args.instance, args.uncertainty, args.level), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cckp", description="Chance-constrained knapsack toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a random deterministic instance")
    p.add_argument("--kind", choices=instance.INSTANCE_KINDS, default="uncorr")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--profit-shift", type=int, default=100)
    p.add_argument("--capacity", type=int)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("adapt", help="gamma-shift a deterministic instance into a chance-constrained one")
    p.add_argument("instance")
    p.add_argument("--gamma", type=int, default=100)
    p.add_argument("--model", choices=["additive", "relative", "normal", "deterministic"], default="additive")
    p.add_argument("--delta", type=float, default=25.0)
    p.add_argument("--beta", type=float, default=0.05)
    p.add_argument("--variance", type=float, default=100.0, help="per-item variance for --model normal")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("solve", help="one run of (1+1) EA or GSEMO on a JSON instance")
    p.add_argument("instance")
    p.add_argument("--algorithm", choices=["ea", "gsemo"], default="ea")
    p.add_argument("--method", choices=[m.value for m in bounds.BoundMethod], default="cantelli")
    p.add_argument("--budget", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float)
    p.add_argument("--trace-stride", type=int, default=1000)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("experiment", help="run a configured experiment matrix")
    p.add_argument("config")
    p.add_argument("--seed", type=int, help="override master_seed")
    p.add_argument("--output-dir")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--fresh", action="store_true", help="discard partial raw records")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("verify", help="check the bounds of a solution against Monte Carlo")
    p.add_argument("instance")
    p.add_argument("--solution", required=True, help="bit string, item 1 first")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigmas", type=float, default=3.0)
    p.add_argument("--exhaustive", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("figures", help="crossover curves (fig1) or alpha bars (fig2) as CSV")
    p.add_argument("which", choices=["fig1", "fig2"])
    p.add_argument("--eps", type=float, nargs="+", default=list(experiment.FIG1_EPSILONS))
    p.add_argument("--e-min", type=float, default=0.5)
    p.add_argument("--e-max", type=float, default=50.0)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--table", help="table.csv from an experiment (fig2)")
    p.add_argument("--instance")
    p.add_argument("--uncertainty", choices=["delta", "beta"], default="delta")
    p.add_argument("--level", type=float, default=25.0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_figures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if args.command == "figures" and args.which == "fig2" and not (args.table and args.instance):
        parser.error("fig2 needs --table and --instance")
    try:
        return args.func(args)
    except ValueError as exc:  # bad instance, config, solution or method choice
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
