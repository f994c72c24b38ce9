"""Checkpoint save cost: the additive cost model and the max-of-readings estimator."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyLog, InputError, LogParseError

COST_LOG_HEADER = "save_time_seconds"
DEFAULT_ITERATIONS = 100_000

# keeps the (iterations, n*r) index matrix bounded
_MAX_BLOCK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class CheckpointCost:
    """Components of one checkpoint save, in seconds.

    ``client_time`` is the local dump, ``latency`` the client-to-server
    transfer, ``upload`` the server-side write and ``ack`` the acknowledgment
    back to the client.
    """

    client_time: float = 0.0
    latency: float = 0.0
    upload: float = 0.0
    ack: float = 0.0

    def __post_init__(self):
        for name in ("client_time", "latency", "upload", "ack"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise InputError(f"{name} must be >= 0, got {v}")

    def total(self) -> float:
        return total_cost(self)


def total_cost(c: CheckpointCost) -> float:
    return c.client_time + c.latency + c.upload + c.ack


@dataclass(frozen=True)
class CostSampleLog:
    """Observed per-checkpoint save times in seconds."""

    samples: tuple

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(float(s) for s in self.samples))
        for s in self.samples:
            if not (s > 0 and math.isfinite(s)):
                raise InputError(f"save times must be > 0, got {s}")

    def __len__(self):
        return len(self.samples)

    @classmethod
    def from_csv(cls, path) -> "CostSampleLog":
        path = Path(path)
        values = []
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != [COST_LOG_HEADER]:
                raise LogParseError(path, 1, f"expected header {COST_LOG_HEADER}")
            for row in reader:
                if not row or all(not c.strip() for c in row):
                    continue
                lineno = reader.line_num
                if len(row) != 1:
                    raise LogParseError(path, lineno, f"expected 1 field, got {len(row)}")
                try:
                    v = float(row[0])
                except ValueError as exc:
                    raise LogParseError(path, lineno, str(exc)) from None
                if not (v > 0 and math.isfinite(v)):
                    raise LogParseError(path, lineno, f"save time must be > 0, got {v}")
                values.append(v)
        return cls(tuple(values))


def estimate_ts(log, n: int, r: int, iterations: int = DEFAULT_ITERATIONS,
                random_source=None) -> float:
    """Estimate the effective checkpoint cost seen by ``n`` processes x ``r`` replicas.

    Each iteration draws ``n*r`` readings from the log uniformly with
    replacement and keeps the largest one, since the slowest save stalls
    the whole computation.  The estimate is the mean of those maxima.

    Parameters
    ----------
    log : CostSampleLog or sequence of float
    n, r : int
        Process and replica counts.
    iterations : int
        Number of max-of-readings draws to average.
    random_source : numpy.random.Generator, optional
        Defaults to a fresh unseeded generator.
    """
    samples = np.asarray(log.samples if isinstance(log, CostSampleLog) else log, dtype=float)
    if samples.size == 0:
        raise EmptyLog("no checkpoint cost samples")
    if n < 1 or r < 1 or iterations < 1:
        raise InputError("n, r and iterations must all be >= 1")
    rng = np.random.default_rng() if random_source is None else random_source
    k = n * r
    block = max(1, _MAX_BLOCK_ELEMENTS // k)
    total = 0.0
    done = 0
    while done < iterations:
        m = min(block, iterations - done)
        idx = rng.integers(0, samples.size, size=(m, k))
        total += samples[idx].max(axis=1).sum()
        done += m
    return float(total / iterations)
