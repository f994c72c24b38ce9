"""Expected checkpointing overhead for n inter-dependent processes with r replicas.

A super-step is one attempt by all processes to cover a checkpoint
interval ``tc``.  It succeeds when every process keeps at least one replica
alive for the whole interval, and a failed super-step is retried in full.
The expected cost of getting past one checkpoint is therefore a geometric
number of intervals plus one checkpoint save.

``model=None`` stands for a failure-free system throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NonPositiveInterval, ProbabilityOutOfRange
from .failure_model import ExponentialFailureModel


@dataclass(frozen=True)
class JobSpec:
    n: int = 1
    r: int = 1

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InputError(f"n must be an integer >= 1, got {self.n}")
        if int(self.r) != self.r or self.r < 1:
            raise InputError(f"r must be an integer >= 1, got {self.r}")


@dataclass(frozen=True)
class OverheadPoint:
    tc: float
    expected_overhead: float
    normalized: float


def log_success_prob_all_from_rate(rate_tc, spec: JobSpec) -> float:
    """``log((1-(1-p)^r)^n)`` with ``p = exp(-rate_tc)``, stable for tiny and huge ``rate_tc``."""
    if rate_tc == 0:
        return 0.0
    # 1 - q^r = p * (1 + q + ... + q^(r-1)) with q = 1 - p: no cancellation
    # for p -> 0 or p -> 1
    q = -math.expm1(-rate_tc)
    log_geometric = math.log1p(math.fsum(q ** k for k in range(1, spec.r)))
    return spec.n * min(0.0, -rate_tc + log_geometric)


def success_prob_all(p: float, spec: JobSpec) -> float:
    """Probability that each of ``n`` processes keeps at least one of ``r`` replicas.

    ``p`` is the survival probability of a single replica over the interval.
    """
    if not (0.0 <= p <= 1.0):
        raise ProbabilityOutOfRange(f"p must lie in [0, 1], got {p}")
    if p == 1.0:
        return 1.0
    if p == 0.0:
        return 0.0
    q = 1.0 - p
    per_process = p * math.fsum(q ** k for k in range(spec.r))
    return min(1.0, math.exp(spec.n * math.log(per_process)))


def _check(tc, ts):
    if not (tc > 0 and math.isfinite(tc)):
        raise NonPositiveInterval(f"checkpoint interval must be > 0, got {tc}")
    if not (ts >= 0 and math.isfinite(ts)):
        raise InputError(f"checkpoint cost must be >= 0, got {ts}")


def _inverse_success(tc, model, spec):
    if model is None:
        return 1.0
    x = -log_success_prob_all_from_rate(model.rate * tc, spec)
    return math.exp(x) if x < 709.0 else math.inf


def expected_overhead(tc: float, ts: float, model: ExponentialFailureModel | None,
                      spec: JobSpec) -> float:
    """Expected wall time to carry all processes across one interval, including the save."""
    _check(tc, ts)
    return tc * _inverse_success(tc, model, spec) + ts


def normalized_overhead(tc: float, ts: float, model: ExponentialFailureModel | None,
                        spec: JobSpec) -> float:
    """Expected overhead per second of useful work; its minimizer is the optimal interval."""
    _check(tc, ts)
    return _inverse_success(tc, model, spec) + ts / tc


def log_normalized_overhead(tc, ts, model, spec) -> float:
    """``log(normalized_overhead)``, finite even where the overhead itself overflows."""
    _check(tc, ts)
    a = 0.0 if model is None else -log_success_prob_all_from_rate(model.rate * tc, spec)
    if ts == 0:
        return a
    return float(np.logaddexp(a, math.log(ts) - math.log(tc)))


def overhead_point(tc, ts, model, spec) -> OverheadPoint:
    g = expected_overhead(tc, ts, model, spec)
    return OverheadPoint(tc=tc, expected_overhead=g, normalized=g / tc)
