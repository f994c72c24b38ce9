import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import lambertw

from ckptplan import (
    ExponentialFailureModel,
    JobSpec,
    Method,
    baseline_daly,
    baseline_young,
    lambert_w0,
    normalized_overhead,
    predict,
    predict_first_order,
    predict_general,
    predict_r1,
    predict_single,
    stationarity_residual,
)
from ckptplan.errors import BelowBranchPoint, DegenerateInput, NonPositiveResult

from conftest import MEASURED_RATE
from oracles import central_difference, stationarity_sides


def w_by_fixed_point(z, iters=200):
    """W(z) for z near 1 from w = z * exp(-w)."""
    w = 0.5
    for _ in range(iters):
        w = z * math.exp(-w)
    return w


class TestLambertW:
    def test_zero(self):
        assert lambert_w0(0.0) == 0.0

    def test_e(self):
        assert lambert_w0(math.e) == pytest.approx(1.0, rel=1e-15)

    def test_omega_constant(self):
        w = lambert_w0(1.0)
        assert w == pytest.approx(w_by_fixed_point(1.0), rel=1e-14)
        assert w == pytest.approx(0.5671432904, abs=1e-10)

    def test_branch_point(self):
        assert lambert_w0(-math.exp(-1.0)) == pytest.approx(-1.0, abs=1e-7)

    def test_below_branch_point(self):
        with pytest.raises(BelowBranchPoint):
            lambert_w0(-0.37)

    def test_identity_grid(self):
        z = np.concatenate([
            -1 / math.e + np.logspace(-6, math.log10(1 / math.e), 2000),
            np.logspace(-12, 6, 2000),
        ])
        for zi in z:
            w = lambert_w0(zi)
            assert abs(w * math.exp(w) - zi) <= 1e-12 * max(1.0, abs(zi))

    @pytest.mark.parametrize("z", [-0.3, -0.1, 1e-8, 0.003, 0.5, 7.0, 123.4, 1e6])
    def test_matches_scipy(self, z):
        assert lambert_w0(z) == pytest.approx(lambertw(z).real, rel=1e-13)


class TestClosedForms:
    def test_single_measured_value(self, measured_model):
        res = predict_single(measured_model, 1.0)
        assert res.tc_opt == pytest.approx(169, abs=1)
        assert res.method is Method.CLOSED_FORM_SINGLE

    def test_single_unit_inputs(self):
        res = predict_single(ExponentialFailureModel(1.0), 1.0)
        assert res.tc_opt == pytest.approx(2 * lambert_w0(0.5), rel=1e-15)
        # W(0.5) = 0.3517337 so the interval is 0.7034674
        assert res.tc_opt == pytest.approx(2 * lambertw(0.5).real, rel=1e-14)
        assert res.tc_opt == pytest.approx(0.70347, abs=1e-5)
        # 1 * tc + 2 ln tc - ln 1 + ln 1 = 0
        assert tc_residual(res.tc_opt) < 1e-14

    @given(st.floats(1e-8, 1.0), st.floats(1e-3, 1e4))
    def test_single_below_first_order(self, rate, ts):
        m = ExponentialFailureModel(rate)
        assert predict_single(m, ts).tc_opt <= math.sqrt(ts / rate) * (1 + 1e-12)

    @given(st.floats(1e-9, 1e-2), st.floats(1e-3, 1e3))
    def test_first_order_close_for_small_rate_cost(self, rate, ts):
        if rate * ts > 1e-4:
            ts = 1e-4 / rate
        m = ExponentialFailureModel(rate)
        assert predict_single(m, ts).tc_opt == pytest.approx(predict_first_order(m, ts).tc_opt, rel=0.01)

    @pytest.mark.parametrize("rate,ts,expected", [
        (MEASURED_RATE, 1.0, math.sqrt(1 / MEASURED_RATE)),
        (1.0, 1.0, 1.0),
        (4.0, 1.0, 0.5),
    ])
    def test_first_order(self, rate, ts, expected):
        tc = predict_first_order(ExponentialFailureModel(rate), ts).tc_opt
        assert tc * tc == pytest.approx(ts / rate, rel=1e-14)
        assert tc == pytest.approx(expected, rel=1e-14)

    def test_first_order_measured(self, measured_model):
        assert predict_first_order(measured_model, 1.0).tc_opt == pytest.approx(169.5, abs=0.05)

    @pytest.mark.parametrize("n,expected", [(16, 42), (32, 29)])
    def test_r1_measured_values(self, measured_model, n, expected):
        res = predict_r1(measured_model, 1.0, n)
        assert res.tc_opt == pytest.approx(expected, abs=1)
        assert res.residual <= 1e-9

    def test_r1_reduces_to_single(self, measured_model):
        a = predict_r1(measured_model, 1.0, 1).tc_opt
        b = predict_single(measured_model, 1.0).tc_opt
        assert a == pytest.approx(b, rel=1e-9)

    @pytest.mark.parametrize("call", [
        lambda: predict_single(None, 1.0),
        lambda: predict_single(ExponentialFailureModel(1e-5), 0.0),
        lambda: predict_first_order(ExponentialFailureModel(1e-5), 0.0),
        lambda: predict_r1(ExponentialFailureModel(1e-5), 0.0, 4),
        lambda: predict_general(None, 1.0, JobSpec(2, 2)),
    ])
    def test_degenerate(self, call):
        with pytest.raises(DegenerateInput):
            call()


def tc_residual(tc):
    return abs(tc + 2 * math.log(tc))


class TestGeneral:
    @pytest.mark.parametrize("n", [1, 2, 16, 32, 64])
    def test_reduces_to_r1(self, measured_model, n):
        a = predict_general(measured_model, 1.0, JobSpec(n, 1)).tc_opt
        b = predict_r1(measured_model, 1.0, n).tc_opt
        assert a == pytest.approx(b, rel=1e-6)

    @pytest.mark.parametrize("n,r,expected", [(16, 2, 297), (32, 3, 714)])
    def test_table_values(self, measured_model, n, r, expected):
        res = predict_general(measured_model, 1.0, JobSpec(n, r))
        assert res.tc_opt == pytest.approx(expected, rel=0.02)
        assert res.method is Method.GENERAL_ROOT
        assert res.residual <= 1e-9

    def test_monotone_in_n(self, measured_model):
        tcs = [predict_general(measured_model, 1.0, JobSpec(n, 1)).tc_opt for n in (1, 16, 32)]
        assert tcs[0] > tcs[1] > tcs[2]

    def test_monotone_in_r(self, measured_model):
        tcs = [predict_general(measured_model, 1.0, JobSpec(16, r)).tc_opt for r in (1, 2, 3)]
        assert tcs[0] < tcs[1] < tcs[2]

    @pytest.mark.parametrize("n,r", [(1, 1), (16, 1), (16, 2), (16, 3), (32, 2), (32, 3)])
    def test_local_minimum(self, measured_model, n, r):
        spec = JobSpec(n, r)
        tc = predict_general(measured_model, 1.0, spec).tc_opt
        best = normalized_overhead(tc, 1.0, measured_model, spec)
        for f in (0.99, 1.01):
            assert normalized_overhead(tc * f, 1.0, measured_model, spec) > best

    @pytest.mark.parametrize("n,r,ts", [(1, 1, 1.0), (16, 2, 1.0), (32, 3, 1.0), (16, 2, 156.0)])
    def test_gradient_matches_finite_difference(self, measured_model, n, r, ts):
        tc = predict_general(measured_model, ts, JobSpec(n, r)).tc_opt
        scale = ts / tc ** 2
        fd = central_difference(tc, ts, MEASURED_RATE, n, r)
        assert abs(float(fd)) / scale <= 1e-6
        lhs, rhs = stationarity_sides(tc, ts, MEASURED_RATE, n, r)
        assert abs(float(lhs / rhs - 1)) <= 1e-9
        assert stationarity_residual(tc, measured_model, ts, JobSpec(n, r)) <= 1e-9

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-6, -3), st.floats(-1, 2.5), st.integers(1, 64), st.integers(1, 4))
    def test_random_configs_stationary(self, log_rate, log_ts, n, r):
        m = ExponentialFailureModel(10 ** log_rate)
        ts = 10 ** log_ts
        res = predict_general(m, ts, JobSpec(n, r))
        assert math.isfinite(res.tc_opt) and res.tc_opt > 0
        lhs, rhs = stationarity_sides(res.tc_opt, ts, m.rate, n, r)
        assert abs(float(lhs / rhs - 1)) <= 1e-9

    def test_analytic_gap_derivative(self):
        # the Newton derivative agrees with a numerical one
        from ckptplan.optimizer import _log_stationarity_gap
        for n, r in [(1, 1), (16, 2), (32, 3), (5, 4)]:
            for tc in (10.0, 300.0, 5000.0):
                g, dg = _log_stationarity_gap(tc, 1e-4, 2.0, n, r)
                h = 1e-6
                up = _log_stationarity_gap(tc * math.exp(h), 1e-4, 2.0, n, r)[0]
                dn = _log_stationarity_gap(tc * math.exp(-h), 1e-4, 2.0, n, r)[0]
                assert dg == pytest.approx((up - dn) / (2 * h), rel=1e-6)


class TestDispatch:
    def test_methods(self, measured_model):
        assert predict(measured_model, 1.0, JobSpec(1, 1), "closed_form_single").tc_opt == pytest.approx(169, abs=1)
        assert predict(measured_model, 1.0, JobSpec(16, 1), "closed_form_r1").tc_opt == pytest.approx(42, abs=1)
        assert predict(measured_model, 1.0, JobSpec(1, 1), "first_order").method is Method.FIRST_ORDER
        young = predict(measured_model, 1.0, JobSpec(), "young").tc_opt
        assert young == pytest.approx(math.sqrt(2 / MEASURED_RATE))
        assert predict(measured_model, 1.0, JobSpec(), "daly").tc_opt == pytest.approx(young - 1)

    def test_closed_form_rejects_replicas(self, measured_model):
        with pytest.raises(DegenerateInput):
            predict(measured_model, 1.0, JobSpec(16, 2), Method.CLOSED_FORM_R1)
        with pytest.raises(DegenerateInput):
            predict(measured_model, 1.0, JobSpec(2, 1), Method.CLOSED_FORM_SINGLE)


class TestBaselines:
    @pytest.mark.parametrize("ts,tf", [(1.0, 28730.0), (0.5, 1.0), (2.0, 2.0)])
    def test_young(self, ts, tf):
        tc = baseline_young(ts, tf).tc_opt
        assert tc * tc == pytest.approx(2 * ts * tf, rel=1e-14)

    def test_young_values(self):
        assert baseline_young(1.0, 28730.0).tc_opt == pytest.approx(239.7, abs=0.05)
        assert baseline_young(0.5, 1.0).tc_opt == 1.0
        assert baseline_young(2.0, 2.0).tc_opt == pytest.approx(2.828, abs=1e-3)

    def test_daly(self):
        tc = baseline_daly(1.0, 28730.0, 0.0).tc_opt
        assert (tc + 1.0) ** 2 == pytest.approx(2 * 28730.0, rel=1e-14)
        assert tc == pytest.approx(238.7, abs=0.05)
        assert baseline_daly(1.0, 49.5, 0.5).tc_opt == pytest.approx(9.0, rel=1e-15)

    def test_daly_nonpositive(self):
        with pytest.raises(NonPositiveResult):
            baseline_daly(2.0, 1.0, 0.0)

    @pytest.mark.parametrize("args", [(0.0, 1.0), (1.0, 0.0)])
    def test_young_degenerate(self, args):
        with pytest.raises(DegenerateInput):
            baseline_young(*args)

    def test_daly_degenerate(self):
        with pytest.raises(DegenerateInput):
            baseline_daly(1.0, 1.0, -1.0)
