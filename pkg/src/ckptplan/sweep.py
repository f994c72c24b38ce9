"""Checkpoint-interval sweeps: completion-time quartiles and predicted-vs-best comparison."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import CkptPlanError, InputError, OutOfSweepRange
from .simulator import SimConfig, run

DEFAULT_INTERVALS = (12.0, 25.0, 50.0, 100.0, 200.0, 400.0, 800.0, 1600.0, 3200.0)
DEFAULT_RUNS = 10

RAW_HEADER = ("tc_s", "run_index", "seed", "completion_s", "error")
SUMMARY_HEADER = ("tc_s", "min", "q25", "median", "q75", "max")
COMPARISON_HEADER = ("t_best", "tc_best", "t_worst", "tc_worst", "tc_predicted",
                     "t_predict", "pct_best_vs_predict", "pct_best_vs_worst")


@dataclass
class IntervalStats:
    tc: float
    runs: np.ndarray
    seeds: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    def _ok(self):
        return self.runs[~np.isnan(self.runs)]

    def _q(self, q):
        ok = self._ok()
        return float(np.quantile(ok, q)) if ok.size else math.nan

    @property
    def min(self):
        return self._q(0.0)

    @property
    def q25(self):
        return self._q(0.25)

    @property
    def median(self):
        return self._q(0.5)

    @property
    def q75(self):
        return self._q(0.75)

    @property
    def max(self):
        return self._q(1.0)

    @property
    def failed_runs(self):
        return int(np.isnan(self.runs).sum())


@dataclass
class SweepReport:
    intervals: list
    runs_per_interval: int
    seed_base: int
    base_config: SimConfig | None = None

    def tcs(self):
        return np.array([s.tc for s in self.intervals], dtype=float)

    def stat(self, name="median"):
        return np.array([getattr(s, name) for s in self.intervals], dtype=float)

    @classmethod
    def from_runs(cls, runs_by_tc, seed_base=0):
        """Build a report from ``{tc: [completion times]}`` (no simulation)."""
        tcs = sorted(runs_by_tc)
        stats = [IntervalStats(float(tc), np.asarray(runs_by_tc[tc], dtype=float)) for tc in tcs]
        counts = {len(s.runs) for s in stats}
        if len(counts) != 1:
            raise InputError("every interval must have the same number of runs")
        return cls(stats, counts.pop(), seed_base)


@dataclass(frozen=True)
class ComparisonMetrics:
    t_best: float
    tc_best: float
    t_worst: float
    tc_worst: float
    tc_predicted: float
    t_predict: float
    pct_best_vs_predict: float
    pct_best_vs_worst: float


def derive_seed(seed_base: int, interval_index: int, run_index: int) -> int:
    ss = np.random.SeedSequence([int(seed_base), int(interval_index), int(run_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _one_run(args):
    config, seed = args
    try:
        return run(config, seed).completion_time, ""
    except CkptPlanError as exc:
        return math.nan, f"{type(exc).__name__}: {exc}"


def run_sweep(base_config: SimConfig, intervals=DEFAULT_INTERVALS,
              runs_per_interval: int = DEFAULT_RUNS, seed_base: int = 0,
              workers: int = 1) -> SweepReport:
    """Simulate ``runs_per_interval`` jobs at every checkpoint interval.

    Run ``k`` at interval index ``i`` uses the seed derived from
    ``(seed_base, i, k)``, so the report does not depend on ``workers``.
    Runs that raise a simulator error are kept as NaN with the error text.
    """
    intervals = [float(t) for t in intervals]
    if not intervals:
        raise InputError("no intervals to sweep")
    if any(b <= a for a, b in zip(intervals, intervals[1:])):
        raise InputError("intervals must be strictly increasing")
    if runs_per_interval < 1:
        raise InputError("runs_per_interval must be >= 1")

    jobs = []
    for i, tc in enumerate(intervals):
        cfg = base_config.with_tc(tc)
        for k in range(runs_per_interval):
            jobs.append((cfg, derive_seed(seed_base, i, k)))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_one_run, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        outcomes = [_one_run(j) for j in jobs]

    stats = []
    for i, tc in enumerate(intervals):
        chunk = slice(i * runs_per_interval, (i + 1) * runs_per_interval)
        out = outcomes[chunk]
        stats.append(IntervalStats(
            tc,
            np.array([o[0] for o in out], dtype=float),
            [j[1] for j in jobs[chunk]],
            [o[1] for o in out],
        ))
    return SweepReport(stats, runs_per_interval, seed_base, base_config)


def interpolate_completion(report: SweepReport, tc: float, stat: str = "median") -> float:
    """Piecewise-linear completion time at ``tc`` from the per-interval ``stat``."""
    tcs = report.tcs()
    if not (tcs[0] <= tc <= tcs[-1]):
        raise OutOfSweepRange(f"tc={tc:g} outside swept range [{tcs[0]:g}, {tcs[-1]:g}]")
    return float(np.interp(tc, tcs, report.stat(stat)))


def percentage_differences(t_best, t_worst, t_predict):
    """Absolute percentage gaps (best vs predicted, best vs worst) relative to ``t_best``."""
    return (abs(t_predict - t_best) / t_best * 100.0,
            abs(t_worst - t_best) / t_best * 100.0)


def compare(report: SweepReport, tc_predicted: float, stat: str = "median") -> ComparisonMetrics:
    values = report.stat(stat)
    tcs = report.tcs()
    if np.all(np.isnan(values)):
        raise InputError("no successful runs in report")
    ib = int(np.nanargmin(values))
    iw = int(np.nanargmax(values))
    t_predict = interpolate_completion(report, tc_predicted, stat)
    pb, pw = percentage_differences(values[ib], values[iw], t_predict)
    return ComparisonMetrics(float(values[ib]), float(tcs[ib]), float(values[iw]),
                             float(tcs[iw]), float(tc_predicted), t_predict, pb, pw)


# --------------------------------------------------------------------------
# CSV output
# --------------------------------------------------------------------------

def _fmt(v):
    return "nan" if isinstance(v, float) and math.isnan(v) else repr(float(v))


def write_raw_csv(path, report: SweepReport) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RAW_HEADER)
        for s in report.intervals:
            seeds = s.seeds or [""] * len(s.runs)
            errors = s.errors or [""] * len(s.runs)
            for k, (t, seed, err) in enumerate(zip(s.runs, seeds, errors)):
                w.writerow([_fmt(s.tc), k, seed, _fmt(float(t)), err])


def write_summary_csv(path, report: SweepReport) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for s in report.intervals:
            w.writerow([_fmt(s.tc), _fmt(s.min), _fmt(s.q25), _fmt(s.median),
                        _fmt(s.q75), _fmt(s.max)])


def write_comparison_csv(path, metrics: ComparisonMetrics) -> None:
    row = asdict(metrics)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMPARISON_HEADER)
        w.writerow([_fmt(row[k]) for k in COMPARISON_HEADER])
