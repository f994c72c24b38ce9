"""
Predicting the optimal checkpoint interval
==========================================

The expected time to carry all processes past one checkpoint is
``tc / P(all survive) + ts``.  Its minimizer per second of work is the
predicted interval.  Closed forms exist for one process and for r = 1.
"""

# %%
import numpy as np

from ckptplan import (
    ExponentialFailureModel,
    JobSpec,
    baseline_daly,
    baseline_young,
    normalized_overhead,
    predict,
    predict_first_order,
    predict_r1,
    predict_single,
)

model = ExponentialFailureModel.from_mttf(28730.0)

# %%
# One process: exact Lambert-W solution against the square-root
# approximation and the classic baselines.
print("single  ", round(predict_single(model, 1.0).tc_opt, 2))
print("sqrt    ", round(predict_first_order(model, 1.0).tc_opt, 2))
print("Young   ", round(baseline_young(1.0, model.mttf()).tc_opt, 2))
print("Daly    ", round(baseline_daly(1.0, model.mttf(), 0.0).tc_opt, 2))

# %%
# Many inter-dependent processes: one failure anywhere rolls everyone
# back, so the interval shrinks with n.  Replicas push it back up.
print(" n  r   tc_opt")
for n in (1, 16, 32):
    for r in (1, 2, 3):
        res = predict(model, 1.0, JobSpec(n, r))
        print(f"{n:2d}  {r}  {res.tc_opt:8.1f}  ({res.method.value})")

# closed form and general solver agree for r = 1
print(predict_r1(model, 1.0, 16).tc_opt, predict(model, 1.0, JobSpec(16, 1)).tc_opt)

# %%
# The overhead curve is flat near the optimum, which is why a rough
# interval is usually good enough.
spec = JobSpec(16, 2)
for tc in np.geomspace(50, 3000, 8):
    print(f"tc={tc:7.1f}  overhead/tc={normalized_overhead(tc, 1.0, model, spec):.4f}")
