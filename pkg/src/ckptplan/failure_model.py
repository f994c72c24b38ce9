"""Exponential node-failure model and MTTF estimation from availability logs.

All durations are seconds.  Failure logs may declare hours; they are
converted when parsed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EmptyLog,
    InputError,
    LogParseError,
    NegativeTime,
    NoFailures,
    NonPositiveMttf,
)

SECONDS_PER_HOUR = 3600.0

FAILURE_LOG_HEADER = ("node_id", "operation_hours", "failures")


@dataclass(frozen=True)
class NodeUptimeRecord:
    """Aggregated availability of one node: operating seconds and failures seen."""

    node_id: str
    operation_time: float
    failure_count: int

    def __post_init__(self):
        if not (self.operation_time > 0 and math.isfinite(self.operation_time)):
            raise InputError(f"operation_time must be > 0, got {self.operation_time}")
        if self.failure_count < 0:
            raise InputError(f"failure_count must be >= 0, got {self.failure_count}")


@dataclass(frozen=True)
class ExponentialFailureModel:
    """Memoryless failure process with constant ``rate`` (failures per second)."""

    rate: float

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise InputError(f"failure rate must be positive and finite, got {self.rate}")

    @classmethod
    def from_mttf(cls, mttf: float) -> "ExponentialFailureModel":
        return from_mttf(mttf)

    def mttf(self) -> float:
        return 1.0 / self.rate

    def survival(self, t):
        return survival_probability(self, t)


def estimate_mttf(records: Sequence[NodeUptimeRecord]) -> float:
    """Pooled MTTF: total operating time divided by total failure count.

    Raises
    ------
    EmptyLog
        If ``records`` is empty.
    NoFailures
        If no failure was observed.  The caller has to choose a rate.
    """
    records = list(records)
    if not records:
        raise EmptyLog("no uptime records")
    total_failures = sum(r.failure_count for r in records)
    if total_failures == 0:
        raise NoFailures("no failures in log; MTTF is undefined for this estimator")
    total_time = math.fsum(r.operation_time for r in records)
    return total_time / total_failures


def from_mttf(mttf: float) -> ExponentialFailureModel:
    if not (mttf > 0 and math.isfinite(mttf)):
        raise NonPositiveMttf(f"mttf must be positive and finite, got {mttf}")
    return ExponentialFailureModel(1.0 / mttf)


def survival_probability(model: ExponentialFailureModel, t):
    """Probability that a node is still alive after ``t`` seconds, ``exp(-rate*t)``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(np.isnan(t_arr)):
        raise NegativeTime(f"time must be >= 0, got {t}")
    out = np.exp(-model.rate * t_arr)
    return float(out) if out.ndim == 0 else out


def sample_time_to_failure(model: ExponentialFailureModel, random_source, size=None):
    """Draw failure times by inverse-CDF sampling, ``-ln(u)/rate``.

    ``random_source`` only needs a ``random(size)`` method returning uniforms
    in [0, 1), e.g. :class:`numpy.random.Generator`.  Zero draws are rejected
    so every returned time is strictly positive.
    """
    if size is None:
        u = random_source.random()
        while u <= 0.0:
            u = random_source.random()
        return -math.log(u) / model.rate
    u = np.asarray(random_source.random(size), dtype=float)
    bad = u <= 0.0
    while np.any(bad):
        u[bad] = random_source.random(int(bad.sum()))
        bad = u <= 0.0
    return -np.log(u) / model.rate


def read_failure_log(path) -> list[NodeUptimeRecord]:
    """Parse a ``node_id,operation_hours,failures`` CSV into records (seconds)."""
    path = Path(path)
    records = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise LogParseError(path, 1, "empty file, expected header")
        if tuple(h.strip() for h in header) != FAILURE_LOG_HEADER:
            raise LogParseError(path, 1, f"expected header {','.join(FAILURE_LOG_HEADER)}")
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise LogParseError(path, lineno, f"expected 3 fields, got {len(row)}")
            node_id, hours, failures = (c.strip() for c in row)
            try:
                hours_f = float(hours)
                failures_i = int(failures)
            except ValueError as exc:
                raise LogParseError(path, lineno, str(exc)) from None
            try:
                records.append(
                    NodeUptimeRecord(node_id, hours_f * SECONDS_PER_HOUR, failures_i)
                )
            except InputError as exc:
                raise LogParseError(path, lineno, str(exc)) from None
    return records


def write_failure_log(path, records: Iterable[NodeUptimeRecord]) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FAILURE_LOG_HEADER)
        for r in records:
            w.writerow([r.node_id, repr(r.operation_time / SECONDS_PER_HOUR), r.failure_count])
