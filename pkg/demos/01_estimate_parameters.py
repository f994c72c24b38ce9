"""
Estimating the failure rate and the checkpoint cost
===================================================

Two measured inputs drive the interval choice: the pooled failure rate of
the client nodes, and the time it takes to record one checkpoint.
"""

# %%
# A node log lists hours of operation and failures per node.  The pooled
# MTTF is total operation time over total failures.
import tempfile
from pathlib import Path

import numpy as np

from ckptplan import CostSampleLog, estimate_mttf, estimate_ts, read_failure_log

workdir = Path(tempfile.mkdtemp())
log_path = workdir / "failures.csv"
log_path.write_text(
    "node_id,operation_hours,failures\n"
    "n01,5000.0,600\n"
    "n02,4000.0,514\n"
    "n03,4678.67,600\n"
)

records = read_failure_log(log_path)
mttf = estimate_mttf(records)
print(f"MTTF = {mttf:.1f} s ({mttf / 3600:.4f} h), rate = {1 / mttf:.6e} per s")

# %%
# With n processes and r replicas every interval waits for the slowest of
# n*r saves, so the effective cost is the mean of the maximum of n*r
# resampled save times.
rng = np.random.default_rng(1)
samples = CostSampleLog(tuple(rng.gamma(20.0, 7.0, size=200)))
for n, r in [(1, 1), (16, 1), (16, 2), (32, 2)]:
    ts = estimate_ts(samples, n, r, iterations=20_000, random_source=np.random.default_rng(2))
    print(f"n={n:2d} r={r}: Ts = {ts:7.1f} s   (single save mean {np.mean(samples.samples):.1f} s)")
