"""Command-line surface: compute distances, construct worst-case measures,
run rate experiments, evaluate closed-form bounds, and run the verification
suites.

Exit codes: 0 success, 1 numerical/runtime failure, 2 usage error. Every
run echoes its resolved configuration to stderr; stdout and output files
are byte-identical for identical argv and seeds.
"""

import argparse
import dataclasses
import json
import math
import os
import sys

from .bounds import bound_set
from .harness import ExperimentConfig, fmt17, run_rate_experiment
from .measures import DiscreteMeasure, worst_case_measure
from .ot import wasserstein
from .srw import DEFAULT_MAX_ITERS, DEFAULT_TOL, srw_distance
from .verify import run_suite


def dumps17(obj, indent=0) -> str:
    """JSON text with every float at 17 significant digits.

    The stdlib encoder prints shortest round-trip floats; reproducibility
    audits want a fixed digit count, so this walks the object tree itself.
    """
    pad = " " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if math.isnan(obj):
            return "NaN"
        if math.isinf(obj):
            return "Infinity" if obj > 0 else "-Infinity"
        return fmt17(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        inner = ", ".join(dumps17(v, indent) for v in obj)
        return f"[{inner}]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(str(k))}: {dumps17(v, indent)}" for k, v in obj.items()]
        return "{" + ", ".join(items) + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _echo_config(name, payload):
    print(f"config {name}: {dumps17(payload)}", file=sys.stderr)


def _parse_schedule(text):
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad schedule {text!r}: comma-separated integers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srwdist",
        description="Wasserstein and subspace-robust Wasserstein distances, "
        "experiments, and bound evaluation for discrete measures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_dist = sub.add_parser("dist", help="distance between two measure files")
    p_dist.add_argument("--metric", required=True, choices=("w1", "w2", "s1", "sk"))
    p_dist.add_argument("--k", type=int, help="subspace dimension for --metric sk")
    p_dist.add_argument("--mu", required=True, help="measure JSON file")
    p_dist.add_argument("--nu", required=True, help="measure JSON file")
    p_dist.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p_dist.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)

    p_con = sub.add_parser("construct", help="build a worst-case packing measure")
    p_con.add_argument("--n", type=int, required=True)
    p_con.add_argument("--out", required=True)
    p_con.add_argument("--seed", type=int, default=0)

    p_rate = sub.add_parser("rate", help="empirical convergence-rate sweep")
    p_rate.add_argument("--metric", required=True, choices=("w1", "w2", "s1", "sk"))
    p_rate.add_argument("--k", type=int)
    p_rate.add_argument("--sampler", required=True, help="e.g. uniform-sphere:d=40 or file:mu.json")
    p_rate.add_argument("--n-schedule", required=True, type=_parse_schedule)
    p_rate.add_argument("--trials", type=int, required=True)
    p_rate.add_argument("--seed", type=int, required=True)
    p_rate.add_argument("--out", required=True, help="CSV report path")
    p_rate.add_argument("--json", dest="json_out", help="JSON mirror path")
    p_rate.add_argument("--threads", type=int, default=os.cpu_count())
    p_rate.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p_rate.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)

    p_bounds = sub.add_parser("bounds", help="closed-form bound set for (d, n, q)")
    p_bounds.add_argument("--d", type=int, required=True)
    p_bounds.add_argument("--n", type=int, required=True)
    p_bounds.add_argument("--q", type=float, required=True)

    p_verify = sub.add_parser("verify", help="run invariant suites")
    p_verify.add_argument(
        "--suite", choices=("lemmas", "metric", "oracle", "all"), default="all"
    )
    return parser


def cmd_dist(parser, args) -> int:
    if args.metric == "sk" and (args.k is None or args.k < 1):
        parser.error("--metric sk needs --k >= 1")
    _echo_config(
        "dist",
        {
            "metric": args.metric,
            "k": args.k,
            "mu": args.mu,
            "nu": args.nu,
            "tol": args.tol,
            "max_iters": args.max_iters,
        },
    )
    mu = DiscreteMeasure.load(args.mu)
    nu = DiscreteMeasure.load(args.nu)
    if args.metric in ("w1", "w2"):
        dist = wasserstein(mu, nu, p=1 if args.metric == "w1" else 2)
        payload = {"distance": float(dist)}
    else:
        k = 1 if args.metric == "s1" else args.k
        res = srw_distance(mu, nu, k=k, tol=args.tol, max_iters=args.max_iters)
        payload = {
            "distance": res.distance,
            "fw_gap": res.fw_gap,
            "iterations": res.iterations,
        }
    print(dumps17(payload))
    return 0


def cmd_construct(parser, args) -> int:
    if args.n < 2:
        parser.error("--n must be at least 2")
    _echo_config("construct", {"n": args.n, "out": args.out, "seed": args.seed})
    mu = worst_case_measure(args.n, seed=args.seed)
    mu.save(args.out)
    return 0


def cmd_rate(parser, args) -> int:
    if args.metric == "sk" and (args.k is None or args.k < 1):
        parser.error("--metric sk needs --k >= 1")
    try:
        cfg = ExperimentConfig(
            sampler_spec=args.sampler,
            metric=args.metric,
            n_schedule=args.n_schedule,
            trials=args.trials,
            master_seed=args.seed,
            k=args.k,
            tol=args.tol,
            max_iters=args.max_iters,
        )
    except ValueError as exc:
        parser.error(str(exc))
    _echo_config("rate", {**cfg.to_dict(), "threads": args.threads, "out": args.out,
                          "json": args.json_out})
    report = run_rate_experiment(cfg, threads=args.threads)
    report.to_csv(args.out)
    if args.json_out:
        with open(args.json_out, "w") as fh:
            fh.write(dumps17(report.json_obj()) + "\n")
    return 0


def cmd_bounds(parser, args) -> int:
    _echo_config("bounds", {"d": args.d, "n": args.n, "q": args.q})
    try:
        bs = bound_set(args.d, args.n, args.q)
    except ValueError as exc:
        parser.error(str(exc))
    print(dumps17(dataclasses.asdict(bs)))
    return 0


def cmd_verify(parser, args) -> int:
    _echo_config("verify", {"suite": args.suite})
    return 0 if run_suite(args.suite) else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {
        "dist": cmd_dist,
        "construct": cmd_construct,
        "rate": cmd_rate,
        "bounds": cmd_bounds,
        "verify": cmd_verify,
    }[args.command]
    try:
        return handler(parser, args)
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
