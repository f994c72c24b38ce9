"""Command line front end.

Exit codes: 0 success, 2 input error, 3 estimator undefined, 4 simulation
budget exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checkpoint_cost import DEFAULT_ITERATIONS, CostSampleLog, estimate_ts
from .errors import (
    BudgetExceeded,
    CkptPlanError,
    EmptyLog,
    InputError,
    NoConvergence,
    NoFailures,
)
from .failure_model import ExponentialFailureModel, estimate_mttf, from_mttf, read_failure_log
from .optimizer import Method, predict
from .overhead import JobSpec
from .simulator import Mode, SimConfig, run, write_trace
from .sweep import (
    DEFAULT_INTERVALS,
    DEFAULT_RUNS,
    compare,
    run_sweep,
    write_comparison_csv,
    write_raw_csv,
    write_summary_csv,
)

EXIT_OK, EXIT_INPUT, EXIT_UNDEFINED, EXIT_BUDGET = 0, 2, 3, 4

SEED_ENV = "CKPT_SEED"


def fmt(v) -> str:
    """Six significant digits, the stable numeric output format."""
    return f"{float(v):.6g}"


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, command, args, inputs=(), seed=None):
    params = {k: v for k, v in sorted(vars(args).items())
              if k not in ("func", "config") and not callable(v)}
    manifest = {
        "command": command,
        "parameters": params,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "seed": seed,
        "tool_version": __version__,
    }
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")


def read_config_file(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment; keys use flag names."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.lstrip("-").replace("-", "_")] = value
    return values


# --------------------------------------------------------------------------
# argument helpers
# --------------------------------------------------------------------------

def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be an integer >= 1, got {s}")
    return v


def _add_rate_flags(p, allow_zero=False):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--lambda", dest="rate", type=float,
                   help="failure rate per second" + (" (0 disables failures)" if allow_zero else ""))
    g.add_argument("--mttf", type=float, help="mean time to failure, seconds")


def _add_job_flags(p):
    p.add_argument("--n", type=_positive_int, default=1, help="number of processes")
    p.add_argument("--r", type=_positive_int, default=1, help="replicas per process")


def _add_sim_flags(p):
    _add_job_flags(p)
    _add_rate_flags(p, allow_zero=True)
    p.add_argument("--ts", type=float, default=1.0, help="checkpoint save cost, seconds")
    p.add_argument("--total-work", type=_positive_int, default=9600, help="work units per process")
    p.add_argument("--quantum-time", type=float, default=1.0, help="seconds per work unit")
    p.add_argument("--heartbeat-timeout", type=float, default=60.0)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.VOLPEX.value)
    p.add_argument("--speed-spread", type=float, default=0.0)
    p.add_argument("--budget-factor", type=float, default=1e4)
    p.add_argument("--config", help="key=value file; command-line flags take precedence")


def _model_from_args(args, allow_zero=False):
    if args.rate is None and args.mttf is None:
        if allow_zero:
            return None
        raise InputError("one of --lambda or --mttf is required")
    if args.mttf is not None:
        return from_mttf(args.mttf)
    if allow_zero and args.rate == 0:
        return None
    if not args.rate > 0:
        raise InputError(f"--lambda must be > 0, got {args.rate}")
    return ExponentialFailureModel(args.rate)


def _sim_config(args, tc):
    return SimConfig(
        spec=JobSpec(args.n, args.r),
        tc=tc,
        ts=args.ts,
        failure_model=_model_from_args(args, allow_zero=True),
        total_work=args.total_work,
        quantum_time=args.quantum_time,
        heartbeat_timeout=args.heartbeat_timeout,
        mode=Mode(args.mode),
        speed_spread=args.speed_spread,
        budget_factor=args.budget_factor,
    )


def _resolve_seed(value):
    if value is not None:
        return value
    env = os.environ.get(SEED_ENV)
    if env is None or not env.strip():
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"{SEED_ENV} must be an integer, got {env!r}") from None


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_estimate_mttf(args, out):
    mttf = estimate_mttf(read_failure_log(args.log_path))
    print(f"mttf_s={fmt(mttf)} lambda={fmt(1.0 / mttf)}", file=out)


def cmd_estimate_ts(args, out):
    log = CostSampleLog.from_csv(args.samples_path)
    if len(log) == 0:
        raise EmptyLog(f"{args.samples_path}: no samples")
    rng = np.random.default_rng(_resolve_seed(args.seed))
    ts = estimate_ts(log, args.n, args.r, args.iterations, rng)
    print(f"ts_s={fmt(ts)}", file=out)


def cmd_predict(args, out):
    model = _model_from_args(args)
    res = predict(model, args.ts, JobSpec(args.n, args.r), args.method)
    print(f"tc_opt_s={fmt(res.tc_opt)} method={res.method.value} residual={fmt(res.residual)}",
          file=out)
    return res


def cmd_simulate(args, out):
    seed = _resolve_seed(args.seed)
    config = _sim_config(args, args.tc)
    result = run(config, seed, trace=args.trace is not None)
    print(f"completion_s={fmt(result.completion_time)} "
          f"checkpoints_saved={result.checkpoints_saved} "
          f"requests_ignored={result.requests_ignored} "
          f"failures={result.failures} work_lost={result.work_lost}", file=out)
    if args.trace is not None:
        write_trace(args.trace, result.per_process_trace)
        write_manifest(f"{args.trace}.manifest.json", "simulate", args, seed=seed)
    return result


def _parse_intervals(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"--intervals must be a comma-separated list of numbers, got {text!r}") from None


def cmd_sweep(args, out):
    seed_base = _resolve_seed(args.seed_base)
    intervals = _parse_intervals(args.intervals)
    config = _sim_config(args, intervals[0] if intervals else 1.0)
    if args.tc_predicted is not None:
        tc_pred = args.tc_predicted
    else:
        if config.failure_model is None:
            raise InputError("no failures configured: pass --tc-predicted, the optimum is unbounded")
        tc_pred = predict(config.failure_model, args.ts, config.spec).tc_opt
    report = run_sweep(config, intervals, args.runs, seed_base, workers=args.workers)
    metrics = compare(report, tc_pred, args.stat)

    prefix = args.out
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    write_raw_csv(f"{prefix}raw.csv", report)
    write_summary_csv(f"{prefix}summary.csv", report)
    write_comparison_csv(f"{prefix}comparison.csv", metrics)
    write_manifest(f"{prefix}manifest.json", "sweep", args, seed=seed_base)
    print(" ".join(f"{k}={fmt(v)}" for k, v in vars(metrics).items()), file=out)
    return metrics


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="ckptplan", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    parser.subcommands = sub.choices

    p = sub.add_parser("estimate-mttf", help="pooled MTTF and failure rate from a node log")
    p.add_argument("log_path")
    p.set_defaults(func=cmd_estimate_mttf)

    p = sub.add_parser("estimate-ts", help="effective checkpoint cost from save-time samples")
    p.add_argument("samples_path")
    _add_job_flags(p)
    p.add_argument("--iterations", type=_positive_int, default=DEFAULT_ITERATIONS)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_estimate_ts)

    p = sub.add_parser("predict", help="predicted optimal checkpoint interval")
    _add_rate_flags(p)
    p.add_argument("--ts", type=float, required=True)
    _add_job_flags(p)
    p.add_argument("--method", choices=[m.value for m in Method], default=Method.GENERAL_ROOT.value)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="simulate one job")
    _add_sim_flags(p)
    p.add_argument("--tc", type=float, default=100.0, help="checkpoint interval, seconds")
    p.add_argument("--seed", type=int)
    p.add_argument("--trace", help="write the event trace CSV here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="sweep checkpoint intervals and compare with the prediction")
    _add_sim_flags(p)
    p.add_argument("--intervals", default=",".join(f"{t:g}" for t in DEFAULT_INTERVALS))
    p.add_argument("--runs", type=_positive_int, default=DEFAULT_RUNS)
    p.add_argument("--seed-base", type=int)
    p.add_argument("--out", default="sweep_", help="output file prefix")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--tc-predicted", type=float, help="override the predicted interval")
    p.add_argument("--stat", choices=["median", "min"], default="median")
    p.set_defaults(func=cmd_sweep)
    return parser


def _parse(parser, argv):
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        values = read_config_file(args.config)
        sub = parser.subcommands[args.command]
        dests = {}
        for action in sub._actions:
            dests[action.dest] = action.dest
            for opt in action.option_strings:
                dests[opt.lstrip("-").replace("-", "_")] = action.dest
        unknown = sorted(set(values) - set(dests))
        if unknown:
            raise InputError(f"{args.config}: unknown keys {', '.join(unknown)}")
        # string defaults go through each flag's type conversion
        sub.set_defaults(**{dests[k]: v for k, v in values.items()})
        args = parser.parse_args(argv)
    return args


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = _parse(parser, argv)
        args.func(args, out)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    except (NoFailures, EmptyLog) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNDEFINED
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InputError, NoConvergence, CkptPlanError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
