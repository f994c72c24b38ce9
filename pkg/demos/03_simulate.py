"""
Simulating replicated jobs
==========================

``model_mode`` reproduces the assumptions behind the analytic overhead and
serves as its Monte-Carlo check.  ``volpex_mode`` follows the request-driven
protocol: the server records a checkpoint only if it is newer and at least
one interval has passed, and lost replicas come back from the latest save.
"""

# %%
import numpy as np

from ckptplan import (
    ExponentialFailureModel,
    JobSpec,
    Mode,
    SimConfig,
    check_server_invariants,
    expected_overhead,
    monte_carlo_overhead,
    run,
)

model = ExponentialFailureModel(0.0000348074)

# %%
# Monte-Carlo overhead per interval against the formula.
for n, r, tc in [(1, 1, 169.0), (16, 1, 42.0), (16, 2, 297.0)]:
    cfg = SimConfig(JobSpec(n, r), tc, 1.0, model, 1, mode=Mode.MODEL)
    sim = monte_carlo_overhead(cfg, 200_000, seed=0)
    print(f"n={n} r={r} tc={tc}: simulated {sim:.3f}  formula {expected_overhead(tc, 1.0, model, cfg.spec):.3f}")

# %%
# A protocol-level run with failures 100x more frequent than measured, so
# something happens in a short job.
cfg = SimConfig(JobSpec(4, 2), 100.0, 2.0, ExponentialFailureModel(3.48e-3), 500,
                heartbeat_timeout=30.0, mode=Mode.VOLPEX)
res = run(cfg, seed=3, trace=True)
print(f"completion {res.completion_time:.1f} s, saved {res.checkpoints_saved}, "
      f"ignored {res.requests_ignored}, failures {res.failures}, lost units {res.work_lost}")
for event in res.per_process_trace:
    if event[1] in ("fail", "detect", "restart", "replace"):
        print(event)
print("server rule violations:", check_server_invariants(res.per_process_trace, cfg.tc))

# %%
# Replication against restart at a high failure rate.
for r in (1, 2, 3):
    c = SimConfig(JobSpec(2, r), 100.0, 1.0, ExponentialFailureModel(2e-3), 300)
    t = [run(c, s).completion_time for s in range(200)]
    print(f"r={r}: mean completion {np.mean(t):.0f} s")
