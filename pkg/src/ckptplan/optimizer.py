"""Optimal checkpoint interval prediction.

Closed forms through the principal Lambert W branch cover the single
process and the unreplicated (r = 1) cases.  The general n x r case is
solved numerically: a bounded minimization of the normalized overhead
locates the optimum, then a safeguarded Newton iteration drives the
stationarity condition to machine precision.  The Young and Daly formulas
are provided as baselines.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from scipy.optimize import minimize_scalar

from .errors import BelowBranchPoint, DegenerateInput, NoConvergence, NonPositiveResult
from .failure_model import ExponentialFailureModel
from .overhead import JobSpec, log_normalized_overhead

INV_E = math.exp(-1.0)

W_MAX_ITER = 50
W_TOL = 1e-14

ROOT_TOL = 1e-12          # relative stationarity residual accepted by predict_general
AGREEMENT_TOL = 1e-3      # minimizer vs root finder
NEWTON_MAX_ITER = 100
LOWER_BOUND_S = 1e-3
UPPER_BOUND_MTTF = 100.0


class Method(str, enum.Enum):
    CLOSED_FORM_SINGLE = "closed_form_single"
    CLOSED_FORM_R1 = "closed_form_r1"
    FIRST_ORDER = "first_order"
    GENERAL_ROOT = "general_root"
    YOUNG = "young"
    DALY = "daly"


@dataclass(frozen=True)
class PredictionResult:
    tc_opt: float
    method: Method
    residual: float = 0.0
    iterations: int = 0


# --------------------------------------------------------------------------
# Lambert W, principal branch
# --------------------------------------------------------------------------

def _w0_initial_guess(z):
    if z < -0.25:
        # branch-point series in p = sqrt(2(ez + 1))
        p = math.sqrt(max(0.0, 2.0 * (math.e * z + 1.0)))
        return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    if z < 0.5:
        return z - z * z + 1.5 * z ** 3
    if z < 3.0:
        return 0.5 * math.log1p(z) + 0.2
    l1 = math.log(z)
    l2 = math.log(l1)
    return l1 - l2 + l2 / l1


def _lambert_w0(z):
    """Return ``(w, iterations)``."""
    if math.isnan(z):
        raise BelowBranchPoint("W0 of NaN")
    if z < -INV_E:
        # allow the rounding of -1/e itself
        if z >= -INV_E * (1.0 + 4e-16):
            return -1.0, 0
        raise BelowBranchPoint(f"W0 is undefined below -1/e, got {z}")
    if z == 0.0:
        return 0.0, 0
    if math.isinf(z):
        return math.inf, 0
    w = _w0_initial_guess(z)
    for it in range(1, W_MAX_ITER + 1):
        ew = math.exp(w)
        f = w * ew - z
        wp1 = w + 1.0
        if wp1 == 0.0:
            return w, it
        # Halley step
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        if denom == 0.0:
            return w, it
        dw = f / denom
        w -= dw
        if abs(dw) <= W_TOL * (1.0 + abs(w)):
            return w, it
    return w, W_MAX_ITER


def lambert_w0(z: float) -> float:
    """Principal branch of the Lambert W function for real ``z >= -1/e``.

    Solves ``w * exp(w) = z`` by Halley iteration from a branch-aware start.

    Raises
    ------
    BelowBranchPoint
        For ``z < -1/e`` where the principal branch is complex.
    """
    return _lambert_w0(float(z))[0]


# --------------------------------------------------------------------------
# closed forms
# --------------------------------------------------------------------------

def _require_positive(model, ts):
    if model is None or not model.rate > 0:
        raise DegenerateInput("failure rate must be > 0: without failures the optimal interval is unbounded")
    if not (ts > 0 and math.isfinite(ts)):
        raise DegenerateInput(f"checkpoint cost ts must be > 0, got {ts}")


def single_stationarity_residual(tc, rate, ts):
    """``|rate*tc + 2 ln tc - ln ts + ln rate|``, zero at the single-process optimum."""
    return abs(rate * tc + 2.0 * math.log(tc) - math.log(ts) + math.log(rate))


def predict_single(model: ExponentialFailureModel, ts: float) -> PredictionResult:
    """Optimal interval for one unreplicated process, ``2 W(sqrt(rate*ts)/2) / rate``."""
    _require_positive(model, ts)
    lam = model.rate
    w, it = _lambert_w0(math.sqrt(lam * ts) / 2.0)
    tc = 2.0 * w / lam
    return PredictionResult(tc, Method.CLOSED_FORM_SINGLE,
                            single_stationarity_residual(tc, lam, ts), it)


def predict_first_order(model: ExponentialFailureModel, ts: float) -> PredictionResult:
    """``sqrt(ts / rate)``, from linearizing the exponential."""
    _require_positive(model, ts)
    tc = math.sqrt(ts / model.rate)
    return PredictionResult(tc, Method.FIRST_ORDER,
                            single_stationarity_residual(tc, model.rate, ts), 0)


def r1_stationarity_residual(tc, rate, ts, n):
    """Relative mismatch of ``ts/tc^2 = n*rate*exp(n*rate*tc)``."""
    lhs = ts / tc ** 2
    rhs = n * rate * math.exp(n * rate * tc)
    return abs(lhs - rhs) / lhs


def predict_r1(model: ExponentialFailureModel, ts: float, n: int) -> PredictionResult:
    """Optimal interval for ``n`` inter-dependent processes without replicas."""
    _require_positive(model, ts)
    if int(n) != n or n < 1:
        raise DegenerateInput(f"n must be an integer >= 1, got {n}")
    ln = model.rate * n
    w, it = _lambert_w0(0.5 * ln * math.sqrt(1.0 / (ln * ts)) * ts)
    tc = 2.0 * w / ln
    return PredictionResult(tc, Method.CLOSED_FORM_R1,
                            r1_stationarity_residual(tc, model.rate, ts, n), it)


# --------------------------------------------------------------------------
# general n x r case
# --------------------------------------------------------------------------

def _log1mexp(x):
    """``log(1 - exp(-x))`` for x > 0."""
    if x > math.log(2.0):
        return math.log1p(-math.exp(-x))
    return math.log(-math.expm1(-x))


def _log_stationarity_gap(tc, rate, ts, n, r):
    """``log(ts/tc^2) - log(rhs)`` and its derivative in ``log(tc)``.

    ``rhs = n r rate e^{-rate tc} (1-e^{-rate tc})^(r-1) / (1-(1-e^{-rate tc})^r)^(n+1)``
    is the slope of the inverse all-process success probability; the gap
    is positive left of the optimum and negative right of it.
    """
    x = rate * tc
    q = -math.expm1(-x)                       # 1 - p
    p = math.exp(-x)
    tail = math.fsum(q ** k for k in range(1, r))
    geometric = 1.0 + tail
    log_succ = min(0.0, -x + math.log1p(tail))   # log(1 - q^r)
    log_rhs = (math.log(n * r * rate) - x
               + ((r - 1) * _log1mexp(x) if r > 1 else 0.0)
               - (n + 1) * log_succ)
    gap = math.log(ts) - 2.0 * math.log(tc) - log_rhs
    # d/dx of each log term, then chain rule to d/dlog(tc) = tc * rate * d/dx
    d_log1mexp = (r - 1) * p / q if r > 1 else 0.0
    # d/dx log(1 - q^r) = -r q^(r-1) p / (1 - q^r) = -r q^(r-1) / geometric
    d_log_succ = -r * q ** (r - 1) / geometric
    d_log_rhs_dx = -1.0 + d_log1mexp - (n + 1) * d_log_succ
    dgap = -2.0 - x * d_log_rhs_dx
    return gap, dgap


def stationarity_residual(tc, model, ts, spec: JobSpec) -> float:
    """Relative residual of ``ts/tc^2 = rhs`` at ``tc`` (``|1 - rhs*tc^2/ts|``)."""
    gap, _ = _log_stationarity_gap(tc, model.rate, ts, spec.n, spec.r)
    return abs(math.expm1(-gap))


def _minimize_overhead(model, ts, spec):
    lo = math.log(LOWER_BOUND_S)
    hi = math.log(UPPER_BOUND_MTTF / model.rate)
    if hi <= lo:
        raise DegenerateInput("search range is empty; failure rate is too large")
    res = minimize_scalar(
        lambda u: log_normalized_overhead(math.exp(u), ts, model, spec),
        bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-10, "maxiter": 500},
    )
    if not res.success:
        raise NoConvergence("bounded minimization failed", message=res.message)
    return math.exp(res.x), int(res.nfev)


def _newton_polish(t0, model, ts, spec):
    """Safeguarded Newton on the log-gap in log(tc); returns (tc, iterations)."""
    lam, n, r = model.rate, spec.n, spec.r
    u = math.log(t0)
    g, dg = _log_stationarity_gap(t0, lam, ts, n, r)
    if g == 0.0:
        return t0, 0
    # bracket the sign change; the gap decreases through the optimum
    step = 0.05
    lo = hi = u
    glo = ghi = g
    for _ in range(200):
        if glo > 0 and ghi < 0:
            break
        if glo <= 0:
            lo -= step
            glo = _log_stationarity_gap(math.exp(lo), lam, ts, n, r)[0]
        if ghi >= 0:
            hi += step
            ghi = _log_stationarity_gap(math.exp(hi), lam, ts, n, r)[0]
        step *= 2.0
    else:
        raise NoConvergence("could not bracket the stationary point", tc_start=t0)

    for it in range(1, NEWTON_MAX_ITER + 1):
        if dg != 0 and math.isfinite(dg):
            cand = u - g / dg
        else:
            cand = math.nan
        if not (lo < cand < hi):
            cand = 0.5 * (lo + hi)
        u = cand
        g, dg = _log_stationarity_gap(math.exp(u), lam, ts, n, r)
        if g > 0:
            lo = u
        elif g < 0:
            hi = u
        if abs(g) <= ROOT_TOL or g == 0.0:
            return math.exp(u), it
        if hi - lo <= 1e-15 * max(1.0, abs(u)):
            # bracket collapsed to rounding level
            return math.exp(0.5 * (lo + hi)), it
    raise NoConvergence("Newton iteration did not converge", tc=math.exp(u), gap=g)


def predict_general(model: ExponentialFailureModel, ts: float, spec: JobSpec) -> PredictionResult:
    """Optimal interval for ``n`` processes with ``r`` replicas each.

    The normalized overhead is minimized over [1 ms, 100 MTTF]; the result
    seeds a Newton iteration on the stationarity condition.  Both answers
    must agree to 0.1%, otherwise :class:`NoConvergence` is raised.
    """
    _require_positive(model, ts)
    t_min, nfev = _minimize_overhead(model, ts, spec)
    tc, it = _newton_polish(t_min, model, ts, spec)
    if abs(tc - t_min) > AGREEMENT_TOL * tc:
        raise NoConvergence("minimizer and root finder disagree", tc_min=t_min, tc_root=tc)
    res = stationarity_residual(tc, model, ts, spec)
    return PredictionResult(tc, Method.GENERAL_ROOT, res, nfev + it)


def predict(model, ts, spec: JobSpec, method=Method.GENERAL_ROOT) -> PredictionResult:
    """Dispatch on ``method``; baselines interpret the model MTTF as the failure scale."""
    method = Method(method)
    if method is Method.GENERAL_ROOT:
        return predict_general(model, ts, spec)
    if method is Method.CLOSED_FORM_R1:
        if spec.r != 1:
            raise DegenerateInput("closed_form_r1 requires r = 1")
        return predict_r1(model, ts, spec.n)
    if method is Method.CLOSED_FORM_SINGLE:
        if spec.n != 1 or spec.r != 1:
            raise DegenerateInput("closed_form_single requires n = r = 1")
        return predict_single(model, ts)
    if method is Method.FIRST_ORDER:
        return predict_first_order(model, ts)
    _require_positive(model, ts)
    if method is Method.YOUNG:
        return baseline_young(ts, model.mttf())
    return baseline_daly(ts, model.mttf(), 0.0)


# --------------------------------------------------------------------------
# baselines
# --------------------------------------------------------------------------

def baseline_young(ts: float, tf: float) -> PredictionResult:
    """Young's first-order interval ``sqrt(2 ts tf)`` (tf is the MTTF)."""
    if not (ts > 0 and tf > 0):
        raise DegenerateInput(f"ts and tf must be > 0, got ts={ts}, tf={tf}")
    return PredictionResult(math.sqrt(2.0 * ts * tf), Method.YOUNG)


def baseline_daly(delta: float, m: float, rr: float) -> PredictionResult:
    """Daly's estimator ``sqrt(2 delta (m + rr)) - delta``.

    ``delta`` is the checkpoint write time, ``m`` the mean time between
    failures and ``rr`` the restart cost.
    """
    if not (delta > 0 and m > 0 and rr >= 0):
        raise DegenerateInput(f"need delta > 0, m > 0, rr >= 0; got {delta}, {m}, {rr}")
    tc = math.sqrt(2.0 * delta * (m + rr)) - delta
    if tc <= 1e-12 * delta:
        raise NonPositiveResult(f"Daly estimate {tc:g} is not positive; outside its validity range")
    return PredictionResult(tc, Method.DALY)
