import csv
import math

import numpy as np
import pytest

from ckptplan import (
    ExponentialFailureModel,
    JobSpec,
    Mode,
    SimConfig,
    SweepReport,
    compare,
    interpolate_completion,
    predict,
    run_sweep,
)
from ckptplan.errors import InputError, OutOfSweepRange
from ckptplan.sweep import (
    DEFAULT_INTERVALS,
    COMPARISON_HEADER,
    RAW_HEADER,
    SUMMARY_HEADER,
    derive_seed,
    percentage_differences,
    write_comparison_csv,
    write_raw_csv,
    write_summary_csv,
)

from conftest import MEASURED_RATE

# n, r, T_best, T_worst, T_predict, printed pct best-vs-predict, printed pct best-vs-worst
TABLE_ROWS = [
    (16, 1, 3344, 5191, 3388, 1.34, 55.26),
    (16, 2, 1946, 2383, 2213, 13.74, 22.43),
    (16, 3, 1463, 1973, 1576, 7.74, 34.87),
    (32, 1, 4362, 6108, 4398, 0.82, 40.03),
    (32, 2, 2081, 2388, 2270, 9.11, 14.52),
    (32, 3, 1348, 1732, 1671, 23.93, 28.49),
    (16, 1, 5028, 10333, 6710, 33.45, 105.50),
    (16, 2, 2217, 4222, 2604, 17.50, 90.46),
    (32, 1, 10934, 17298, 14331, 31.08, 58.21),
    (32, 2, 2906, 18374, 3020, 3.94, 188.19),
]


def model_config(n=16, r=1, rate=MEASURED_RATE, ts=1.0, total_work=9600):
    model = None if rate is None else ExponentialFailureModel(rate)
    return SimConfig(JobSpec(n, r), DEFAULT_INTERVALS[0], ts, model, total_work, mode=Mode.MODEL)


class TestQuantiles:
    def test_hand_quantiles(self):
        rep = SweepReport.from_runs({100.0: [40, 10, 30, 20]})
        s = rep.intervals[0]
        assert (s.min, s.q25, s.median, s.q75, s.max) == (10, 17.5, 25, 32.5, 40)

    def test_ordering(self, rng):
        rep = SweepReport.from_runs({float(t): rng.exponential(100, 17) for t in (1, 2, 3)})
        for s in rep.intervals:
            assert s.min <= s.q25 <= s.median <= s.q75 <= s.max

    def test_unequal_run_counts(self):
        with pytest.raises(InputError):
            SweepReport.from_runs({1.0: [1, 2], 2.0: [1]})

    def test_failed_runs_excluded(self):
        rep = SweepReport.from_runs({1.0: [1.0, math.nan, 3.0]})
        assert rep.intervals[0].median == 2.0
        assert rep.intervals[0].failed_runs == 1


class TestRunSweep:
    def test_failure_free_identical_runs(self):
        cfg = model_config(rate=None, total_work=9600)
        rep = run_sweep(cfg, [12, 25, 50, 100], 4, seed_base=1)
        for s in rep.intervals:
            k = 9600 / s.tc
            assert s.min == s.median == s.max == k * (s.tc + 1.0)

    def test_reproducible(self):
        cfg = model_config(n=4, r=2, rate=MEASURED_RATE * 20, total_work=2400)
        a = run_sweep(cfg, [25, 100, 400], 5, seed_base=9)
        b = run_sweep(cfg, [25, 100, 400], 5, seed_base=9)
        for x, y in zip(a.intervals, b.intervals):
            assert np.array_equal(x.runs, y.runs) and x.seeds == y.seeds

    def test_workers_do_not_change_results(self):
        cfg = model_config(n=4, r=2, rate=MEASURED_RATE * 20, total_work=2400)
        a = run_sweep(cfg, [25, 100, 400], 3, seed_base=9, workers=1)
        b = run_sweep(cfg, [25, 100, 400], 3, seed_base=9, workers=2)
        for x, y in zip(a.intervals, b.intervals):
            assert np.array_equal(x.runs, y.runs)

    def test_seeds_distinct(self):
        seeds = {derive_seed(0, i, k) for i in range(9) for k in range(100)}
        assert len(seeds) == 900
        assert derive_seed(1, 0, 0) != derive_seed(0, 0, 0)

    def test_failed_runs_recorded(self):
        cfg = model_config(n=4, total_work=2400)
        rep = run_sweep(cfg, [25, 70], 2, seed_base=0)
        assert rep.intervals[0].failed_runs == 0
        bad = rep.intervals[1]
        assert bad.failed_runs == 2 and all("WorkNotDivisible" in e for e in bad.errors)

    @pytest.mark.parametrize("intervals,runs", [([], 1), ([50, 25], 1), ([25, 25], 1), ([25], 0)])
    def test_validation(self, intervals, runs):
        with pytest.raises(InputError):
            run_sweep(model_config(), intervals, runs)

    def test_u_shaped_curve(self, measured_model):
        cfg = model_config(n=16, r=1)
        rep = run_sweep(cfg, DEFAULT_INTERVALS, 30, seed_base=2024)
        med = rep.stat("median")
        best = int(np.argmin(med))
        assert rep.tcs()[best] in (25.0, 50.0)
        tc_pred = predict(measured_model, 1.0, JobSpec(16, 1)).tc_opt
        assert 25.0 < tc_pred < 50.0
        # U shape: falling to the minimum, rising after it
        assert np.all(np.diff(med[: best + 1]) < 0)
        assert np.all(np.diff(med[best:]) > 0)


class TestInterpolation:
    rep = SweepReport.from_runs({100.0: [1000.0], 200.0: [2000.0], 400.0: [1000.0]})

    @pytest.mark.parametrize("tc,want", [(100.0, 1000.0), (150.0, 1500.0), (125.0, 1250.0),
                                         (200.0, 2000.0), (300.0, 1500.0)])
    def test_values(self, tc, want):
        assert interpolate_completion(self.rep, tc) == want

    @pytest.mark.parametrize("tc", [99.9, 400.1])
    def test_out_of_range(self, tc):
        with pytest.raises(OutOfSweepRange):
            interpolate_completion(self.rep, tc)

    def test_monotone_between_points(self):
        xs = np.linspace(100, 200, 50)
        ys = [interpolate_completion(self.rep, x) for x in xs]
        assert np.all(np.diff(ys) > 0)


class TestCompare:
    def test_table_row(self):
        pb, pw = percentage_differences(3344, 5191, 3388)
        # the printed 1.34 and 55.26 come from unrounded medians
        assert pb == pytest.approx(44 / 3344 * 100)
        assert pw == pytest.approx(1847 / 3344 * 100)

    @pytest.mark.parametrize("row", TABLE_ROWS)
    def test_table_best_vs_predict(self, row):
        _, _, best, worst, pred, p1, _ = row
        assert percentage_differences(best, worst, pred)[0] == pytest.approx(p1, abs=0.05)

    # the printed best-vs-worst entries of two rows do not follow from the
    # row's own medians (0.23 and 344 points apart); they are left out here
    @pytest.mark.parametrize("row", [r for i, r in enumerate(TABLE_ROWS) if i not in (4, 9)])
    def test_table_best_vs_worst(self, row):
        _, _, best, worst, pred, _, p2 = row
        assert percentage_differences(best, worst, pred)[1] == pytest.approx(p2, abs=0.05)

    def test_table_inconsistent_rows(self):
        assert percentage_differences(2081, 2388, 2270)[1] == pytest.approx(14.75, abs=0.01)
        assert percentage_differences(2906, 18374, 3020)[1] == pytest.approx(532.28, abs=0.01)

    def test_zero_cases(self):
        assert percentage_differences(100.0, 100.0, 100.0) == (0.0, 0.0)

    def test_compare_report(self):
        rep = SweepReport.from_runs({10.0: [900.0], 20.0: [800.0], 40.0: [1200.0]})
        m = compare(rep, 30.0)
        assert (m.t_best, m.tc_best, m.t_worst, m.tc_worst) == (800.0, 20.0, 1200.0, 40.0)
        assert m.t_predict == 1000.0
        assert m.pct_best_vs_predict == pytest.approx(25.0)
        assert m.pct_best_vs_worst == pytest.approx(50.0)
        assert m.t_best <= m.t_predict and m.t_best <= m.t_worst

    def test_min_statistic(self):
        rep = SweepReport.from_runs({10.0: [900.0, 2000.0], 20.0: [950.0, 960.0]})
        assert compare(rep, 10.0, "min").tc_best == 10.0
        assert compare(rep, 10.0, "median").tc_best == 20.0

    def test_out_of_range(self):
        rep = SweepReport.from_runs({10.0: [1.0], 20.0: [2.0]})
        with pytest.raises(OutOfSweepRange):
            compare(rep, 42.0)

    @pytest.mark.parametrize("k", [0.001, 3.0, 1e6])
    def test_scale_equivariant(self, rng, k):
        runs = {float(t): rng.uniform(1000, 5000, 7) for t in (12, 25, 50, 100)}
        a = compare(SweepReport.from_runs(runs), 40.0)
        b = compare(SweepReport.from_runs({t: v * k for t, v in runs.items()}), 40.0)
        assert b.pct_best_vs_predict == pytest.approx(a.pct_best_vs_predict, rel=1e-12)
        assert b.pct_best_vs_worst == pytest.approx(a.pct_best_vs_worst, rel=1e-12)


def test_csv_outputs(tmp_path):
    rep = SweepReport.from_runs({10.0: [1.0, 2.0], 20.0: [3.0, math.nan]})
    write_raw_csv(tmp_path / "raw.csv", rep)
    write_summary_csv(tmp_path / "summary.csv", rep)
    write_comparison_csv(tmp_path / "cmp.csv", compare(rep, 15.0))

    raw = list(csv.reader(open(tmp_path / "raw.csv")))
    assert tuple(raw[0]) == RAW_HEADER and len(raw) == 5
    assert raw[4][3] == "nan"
    summary = list(csv.reader(open(tmp_path / "summary.csv")))
    assert tuple(summary[0]) == SUMMARY_HEADER
    assert [float(x) for x in summary[1]] == [10.0, 1.0, 1.25, 1.5, 1.75, 2.0]
    cmp_rows = list(csv.reader(open(tmp_path / "cmp.csv")))
    assert tuple(cmp_rows[0]) == COMPARISON_HEADER and len(cmp_rows) == 2
    assert float(cmp_rows[1][COMPARISON_HEADER.index("t_predict")]) == 2.25
