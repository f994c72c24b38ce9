"""
Sweeping intervals and comparing with the prediction
====================================================

Run many jobs per interval over a grid from 12 s to 3200 s, take medians,
and check how close the predicted interval lands to the best one found.
"""

# %%
import tempfile
from pathlib import Path

from ckptplan import ExponentialFailureModel, JobSpec, Mode, SimConfig, compare, predict, run_sweep
from ckptplan.sweep import DEFAULT_INTERVALS, write_comparison_csv, write_raw_csv, write_summary_csv

model = ExponentialFailureModel(0.0000348074)
out = Path(tempfile.mkdtemp())

for r in (1, 2, 3):
    spec = JobSpec(16, r)
    cfg = SimConfig(spec, DEFAULT_INTERVALS[0], 1.0, model, 9600, mode=Mode.MODEL)
    report = run_sweep(cfg, DEFAULT_INTERVALS, runs_per_interval=50, seed_base=r)
    tc_pred = predict(model, 1.0, spec).tc_opt
    m = compare(report, tc_pred)

    print(f"\nn=16 r={r}: predicted {tc_pred:.0f} s")
    print("   tc    q25   median    q75")
    for s in report.intervals:
        print(f"{s.tc:5.0f} {s.q25:7.0f} {s.median:7.0f} {s.q75:7.0f}")
    print(f"best {m.t_best:.0f} at {m.tc_best:.0f}, predicted {m.t_predict:.0f}, "
          f"gap {m.pct_best_vs_predict:.2f}%, worst gap {m.pct_best_vs_worst:.2f}%")

    write_raw_csv(out / f"r{r}_raw.csv", report)
    write_summary_csv(out / f"r{r}_summary.csv", report)
    write_comparison_csv(out / f"r{r}_comparison.csv", m)

print("\nCSV files in", out)
