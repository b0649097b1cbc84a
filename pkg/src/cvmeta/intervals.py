"""Confidence intervals for the heterogeneity-to-effect ratio measures.

Five constructions are provided on top of two component intervals:

* component intervals: a profile interval for the between-study variance
  (inverting the generalized dispersion statistic against chi-square
  quantiles) and a Wald interval for the pooled effect, folded onto the
  |beta| scale by a three-case rule;
* ``wald_logit_interval``: symmetric on the logit scale via the
  delta-method variance, back-transformed;
* ``combine_fixed``: plug component bounds into the measure with the
  other parameter fixed (or both varying), exploiting monotonicity;
* ``alpha_adjusted_interval``: the both-varying combination with the
  component confidence levels reduced so that the equal-split corner of
  the propagating construction is reproduced (about 83.42% components
  for a 95% target);
* ``propimp_interval``: propagating imprecision, which optimizes the
  measure over all splits of the critical value between the two
  components along a quarter circle.

All measure intervals are computed on the m1 = tau/(tau+|beta|) scale
first and mapped to the other two scales through the exact links
cv = u/(1-u) and logit-doubling, so the three reported intervals are
consistent bound-by-bound by construction.

When the between-study variance estimate is truncated to zero the data
carry no usable signal about the ratio measures, and every construction
returns the maximal interval with a degenerate flag: (0, 1) for the
unit-scale measures and (0, inf) for the coefficient of variation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import MetaDataset, PooledFit, fit_rem
from .errors import DomainError, NumericFailureError, UndefinedMomentsError
from .measures import inv_logit, logit, logit_m1_moments
from .numerics import chisq_quantile, find_root, norm_cdf, norm_quantile, optimize_1d

__all__ = [
    "MEASURE_TAGS",
    "METHOD_TAGS",
    "RATIO_MEASURES",
    "IntervalEstimate",
    "PropImpTrace",
    "tau2_ci_qprofile",
    "beta_ci",
    "abs_beta_ci",
    "beta_sq_ci",
    "wald_logit_interval",
    "wald_logit_intervals",
    "combine_fixed",
    "alpha_adjusted_interval",
    "alpha_adjusted_intervals",
    "alpha_adjusted_level",
    "propimp_interval",
    "propimp_intervals",
    "maximal_interval",
]

RATIO_MEASURES = ("CV_B", "M1", "M2")
MEASURE_TAGS = RATIO_MEASURES + ("TAU2", "BETA", "ABS_BETA", "BETA_SQ")
METHOD_TAGS = (
    "WALD",
    "FIXED_TAU",
    "FIXED_BETA",
    "BOTH95",
    "ALPHA_ADJ",
    "PROPIMP",
    "QPROFILE",
)

_HALF_PI = math.pi / 2.0


@dataclass(frozen=True)
class IntervalEstimate:
    """A confidence interval for one quantity under one construction.

    Attributes
    ----------
    lower, upper : float
        upper may be math.inf.  Bounds are nonnegative for every
        quantity except the signed pooled effect (measure "BETA").
    measure : str
        One of MEASURE_TAGS.
    method : str
        One of METHOD_TAGS.
    alpha_tau, alpha_beta : float
        Component miscoverage configuration.  0 records a component
        fixed at its point estimate; for the propagating construction
        both fields record the overall target level.
    degenerate : bool
        True when the interval is the maximal fallback produced by a
        zero heterogeneity estimate (or a zero pooled effect for the
        logit construction); such intervals carry no data information.
    """

    lower: float
    upper: float
    measure: str
    method: str
    alpha_tau: float
    alpha_beta: float
    degenerate: bool = False

    def __post_init__(self):
        if self.measure not in MEASURE_TAGS:
            raise DomainError(f"unknown measure tag {self.measure!r}")
        if self.method not in METHOD_TAGS:
            raise DomainError(f"unknown method tag {self.method!r}")
        if math.isnan(self.lower) or math.isnan(self.upper):
            raise DomainError("interval bounds cannot be NaN")
        if self.lower > self.upper:
            raise DomainError(f"lower {self.lower!r} exceeds upper {self.upper!r}")
        if self.measure != "BETA" and self.lower < 0:
            raise DomainError(f"{self.measure} lower bound must be nonnegative")
        if self.measure in ("M1", "M2") and self.upper > 1:
            raise DomainError(f"{self.measure} upper bound must be at most 1")
        for a in (self.alpha_tau, self.alpha_beta):
            if not 0.0 <= a < 1.0:
                raise DomainError(f"alpha levels must lie in [0, 1), got {a!r}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


@dataclass(frozen=True)
class PropImpTrace:
    """Optimizer diagnostics from a propagating-imprecision run.

    theta_lower and theta_upper are the quarter-circle angles at which
    the lower and upper bounds were attained (smallest such angle on
    ties); evaluations counts objective evaluations across both bounds.
    """

    theta_lower: float
    theta_upper: float
    evaluations: int

    def __post_init__(self):
        if not (0.0 <= self.theta_lower <= _HALF_PI + 1e-12):
            raise DomainError(f"theta_lower outside [0, pi/2]: {self.theta_lower!r}")
        if not (0.0 <= self.theta_upper <= _HALF_PI + 1e-12):
            raise DomainError(f"theta_upper outside [0, pi/2]: {self.theta_upper!r}")


# ---------------------------------------------------------------------------
# generalized dispersion profile

def _qgen_and_slope(y: np.ndarray, v: np.ndarray, t: float) -> tuple[float, float]:
    """Generalized dispersion statistic at candidate variance t, and its slope.

    Q_gen(t) = sum_i (y_i - b(t))^2 / (v_i + t) with b(t) the weighted
    mean at weights 1/(v_i + t).  Because b(t) is the weight-stationary
    point, the derivative reduces to -sum_i w_i^2 (y_i - b)^2, which is
    what makes the profile strictly decreasing wherever effects differ.
    """
    w = 1.0 / (v + t)
    b = (w * y).sum() / w.sum()
    r2 = (y - b) ** 2
    return float((w * r2).sum()), float(-(w * w * r2).sum())


def _qgen(y: np.ndarray, v: np.ndarray, t: float) -> float:
    q, _ = _qgen_and_slope(y, v, t)
    return q


def _qgen_root(y: np.ndarray, v: np.ndarray, target: float, warm: float | None = None) -> float:
    """Solve Q_gen(t) = target for t >= 0 (0 when the profile starts below).

    Newton iteration with a maintained bracket; the optional warm start
    seeds the iteration, which matters in the optimizer's inner loop
    where consecutive targets are close.
    """
    q0, _ = _qgen_and_slope(y, v, 0.0)
    if q0 <= target:
        return 0.0
    lo, hi = 0.0, 1.0
    q_hi, _ = _qgen_and_slope(y, v, hi)
    while q_hi > target:
        lo, hi = hi, 4.0 * hi
        if hi > 1e30:
            raise NumericFailureError("dispersion profile failed to drop below target")
        q_hi, _ = _qgen_and_slope(y, v, hi)
    t = warm if (warm is not None and lo < warm < hi) else 0.5 * (lo + hi)
    for _ in range(120):
        q, dq = _qgen_and_slope(y, v, t)
        if q > target:
            lo = t
        else:
            hi = t
        t_next = t - (q - target) / dq if dq != 0.0 else 0.5 * (lo + hi)
        if not lo < t_next < hi:
            t_next = 0.5 * (lo + hi)
        if abs(t_next - t) <= 1e-13 * max(1.0, t):
            return t_next
        t = t_next
    raise NumericFailureError("profile root iteration did not converge")


def tau2_ci_qprofile(data: MetaDataset, alpha: float = 0.05) -> IntervalEstimate:
    """Profile confidence interval for the between-study variance.

    The bounds solve Q_gen(t) = chi-square quantile at 1 - alpha/2
    (lower bound) and alpha/2 (upper bound) on K - 1 degrees of
    freedom.  The profile is strictly decreasing, so each pivot has at
    most one root; bounds truncate at 0, and data too homogeneous to
    reach the upper pivot give the empty-at-zero interval [0, 0].

    Parameters
    ----------
    data : MetaDataset
    alpha : float
        Two-sided miscoverage, in (0, 1).

    Returns
    -------
    IntervalEstimate
        measure "TAU2", method "QPROFILE".
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must be inside (0, 1), got {alpha!r}")
    y, v, k = data.effects, data.within_vars, data.k
    lower = _qprofile_bound(y, v, chisq_quantile(1.0 - alpha / 2.0, k - 1))
    upper = _qprofile_bound(y, v, chisq_quantile(alpha / 2.0, k - 1))
    return IntervalEstimate(lower, upper, "TAU2", "QPROFILE", alpha, 0.0)


def _qprofile_bound(y: np.ndarray, v: np.ndarray, target: float) -> float:
    """One profile bound through the bracketed root finder."""
    if _qgen(y, v, 0.0) <= target:
        return 0.0
    hi = 1.0
    while _qgen(y, v, hi) > target:
        hi *= 4.0
        if hi > 1e30:
            raise NumericFailureError("dispersion profile failed to drop below target")
    return find_root(lambda t: _qgen(y, v, t) - target, (0.0, hi), tol=1e-13)


# ---------------------------------------------------------------------------
# pooled-effect intervals

def beta_ci(fit: PooledFit, alpha: float = 0.05) -> IntervalEstimate:
    """Wald interval for the pooled effect under the fitted weights."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must be inside (0, 1), got {alpha!r}")
    half = norm_quantile(1.0 - alpha / 2.0) * math.sqrt(fit.var_beta_hat)
    return IntervalEstimate(
        fit.beta_hat - half, fit.beta_hat + half, "BETA", "WALD", 0.0, alpha
    )


def abs_beta_ci(beta_interval: IntervalEstimate) -> IntervalEstimate:
    """Fold a signed-effect interval onto the magnitude scale.

    Three cases: both bounds positive keep their order under | . |;
    both negative swap; an interval straddling zero becomes
    [0, max of the folded endpoints], the conservative choice.  A zero
    endpoint is grouped with the sign of the other endpoint.
    """
    lo, hi = beta_interval.lower, beta_interval.upper
    if lo >= 0.0 and hi > 0.0:
        a, b = lo, hi
    elif hi <= 0.0 and lo < 0.0:
        a, b = -hi, -lo
    elif lo == 0.0 and hi == 0.0:
        a, b = 0.0, 0.0
    else:
        a, b = 0.0, max(-lo, hi)
    return replace(beta_interval, lower=a, upper=b, measure="ABS_BETA")


def beta_sq_ci(beta_interval: IntervalEstimate) -> IntervalEstimate:
    """Interval for the squared effect: square the folded bounds."""
    folded = abs_beta_ci(beta_interval)
    return replace(
        folded, lower=folded.lower**2, upper=folded.upper**2, measure="BETA_SQ"
    )


# ---------------------------------------------------------------------------
# measure-scale helpers

def _m1_corner(t: float, b: float) -> float:
    """m1 evaluated at a (tau, |beta|) corner with boundary conventions."""
    if t == 0.0:
        return 0.0
    if b == 0.0:
        return 1.0
    return t / (t + b)


def _cv_from_m1(u: float) -> float:
    return math.inf if u >= 1.0 else u / (1.0 - u)


def _m2_from_m1(u: float) -> float:
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return 1.0
    return inv_logit(2.0 * logit(u))


def _linked_intervals(
    m1_lo: float,
    m1_hi: float,
    method: str,
    alpha_tau: float,
    alpha_beta: float,
    degenerate: bool = False,
) -> dict[str, IntervalEstimate]:
    """All three measure intervals from the m1-scale bounds.

    The cv and squared-scale bounds are exact transforms of the m1
    bounds, so link consistency across the three reported intervals
    holds to the last bit.
    """
    out = {}
    for measure, lo, hi in (
        ("CV_B", _cv_from_m1(m1_lo), _cv_from_m1(m1_hi)),
        ("M1", m1_lo, m1_hi),
        ("M2", _m2_from_m1(m1_lo), _m2_from_m1(m1_hi)),
    ):
        out[measure] = IntervalEstimate(
            lo, hi, measure, method, alpha_tau, alpha_beta, degenerate
        )
    return out


def maximal_interval(
    measure: str, method: str, alpha_tau: float = 0.0, alpha_beta: float = 0.0
) -> IntervalEstimate:
    """The degenerate fallback interval: (0, 1) on the unit scale, (0, inf) for cv."""
    if measure not in RATIO_MEASURES:
        raise DomainError(f"maximal_interval applies to {RATIO_MEASURES}, got {measure!r}")
    upper = math.inf if measure == "CV_B" else 1.0
    return IntervalEstimate(0.0, upper, measure, method, alpha_tau, alpha_beta, True)


def _maximal_all(method: str, alpha_tau: float, alpha_beta: float) -> dict[str, IntervalEstimate]:
    return {m: maximal_interval(m, method, alpha_tau, alpha_beta) for m in RATIO_MEASURES}


# ---------------------------------------------------------------------------
# Wald on the logit scale

def wald_logit_intervals(fit: PooledFit, alpha: float = 0.05) -> dict[str, IntervalEstimate]:
    """Symmetric logit-scale intervals for all three measures.

    One interval is built on the logit(m1) scale from the delta-method
    variance; the other two scales follow through the exact links, so a
    single construction serves cv, m1, and m2 with bound-by-bound
    consistency.  A zero heterogeneity estimate (or zero pooled effect)
    has no usable logit moments and yields the degenerate maximal
    intervals instead.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must be inside (0, 1), got {alpha!r}")
    try:
        moments = logit_m1_moments(fit)
    except UndefinedMomentsError:
        return _maximal_all("WALD", alpha, alpha)
    center = math.log(math.sqrt(fit.tau2_hat) / abs(fit.beta_hat))
    half = norm_quantile(1.0 - alpha / 2.0) * math.sqrt(moments.var_logit_m1)
    return _linked_intervals(
        inv_logit(center - half), inv_logit(center + half), "WALD", alpha, alpha
    )


def wald_logit_interval(fit: PooledFit, measure: str, alpha: float = 0.05) -> IntervalEstimate:
    """Single-measure view of :func:`wald_logit_intervals`."""
    if measure not in RATIO_MEASURES:
        raise DomainError(f"measure must be one of {RATIO_MEASURES}, got {measure!r}")
    return wald_logit_intervals(fit, alpha)[measure]


# ---------------------------------------------------------------------------
# fixed-parameter and simultaneous combinations

def combine_fixed(
    fit: PooledFit,
    tau_interval: IntervalEstimate,
    abs_beta_interval: IntervalEstimate,
    mode: str,
) -> dict[str, IntervalEstimate]:
    """Combine component intervals into measure intervals by monotonicity.

    The measure rises in tau and falls in |beta|, so each bound is the
    measure at a corner of the (tau, |beta|) box:

    * FIX_TAU: tau pinned at its estimate, |beta| spans its interval;
    * FIX_BETA: |beta| pinned, tau spans the profile interval (square
      roots of the variance-scale bounds);
    * BOTH: both parameters at opposite corners.

    Parameters
    ----------
    fit : PooledFit
    tau_interval : IntervalEstimate
        measure "TAU2" (variance scale; square roots are taken here).
    abs_beta_interval : IntervalEstimate
        measure "ABS_BETA".
    mode : {"FIX_TAU", "FIX_BETA", "BOTH"}

    Returns
    -------
    dict mapping "CV_B", "M1", "M2" to IntervalEstimate
        Method tags "FIXED_TAU", "FIXED_BETA", "BOTH95".  Infinite cv
        upper bounds are legal values (zero lower |beta| bound).
    """
    if tau_interval.measure != "TAU2":
        raise DomainError(f"tau_interval must be a TAU2 interval, got {tau_interval.measure!r}")
    if abs_beta_interval.measure != "ABS_BETA":
        raise DomainError(
            f"abs_beta_interval must be an ABS_BETA interval, got {abs_beta_interval.measure!r}"
        )
    modes = {
        "FIX_TAU": ("FIXED_TAU", 0.0, abs_beta_interval.alpha_beta),
        "FIX_BETA": ("FIXED_BETA", tau_interval.alpha_tau, 0.0),
        "BOTH": ("BOTH95", tau_interval.alpha_tau, abs_beta_interval.alpha_beta),
    }
    if mode not in modes:
        raise DomainError(f"mode must be one of {sorted(modes)}, got {mode!r}")
    method, a_tau, a_beta = modes[mode]

    tau_hat = math.sqrt(fit.tau2_hat)
    if tau_hat == 0.0:
        return _maximal_all(method, a_tau, a_beta)
    beta_abs = abs(fit.beta_hat)
    tau_lo = math.sqrt(tau_interval.lower)
    tau_hi = math.sqrt(tau_interval.upper)
    b_lo, b_hi = abs_beta_interval.lower, abs_beta_interval.upper

    if mode == "FIX_TAU":
        m1_lo, m1_hi = _m1_corner(tau_hat, b_hi), _m1_corner(tau_hat, b_lo)
    elif mode == "FIX_BETA":
        m1_lo, m1_hi = _m1_corner(tau_lo, beta_abs), _m1_corner(tau_hi, beta_abs)
    else:
        m1_lo, m1_hi = _m1_corner(tau_lo, b_hi), _m1_corner(tau_hi, b_lo)
    return _linked_intervals(m1_lo, m1_hi, method, a_tau, a_beta)


def alpha_adjusted_level(alpha: float = 0.05) -> float:
    """Component miscoverage for the equal-split adjusted combination.

    2 (1 - Phi(z / sqrt 2)) with z the two-sided critical value of the
    overall level: the component level at which both parameters sit on
    the diagonal of the propagating construction's quarter circle.
    About 0.16578 for a 95% target, i.e. 83.42% component intervals.
    """
    z = norm_quantile(1.0 - alpha / 2.0)
    return 2.0 * (1.0 - norm_cdf(z / math.sqrt(2.0)))


def alpha_adjusted_intervals(
    data: MetaDataset, alpha: float = 0.05, fit: PooledFit | None = None
) -> dict[str, IntervalEstimate]:
    """Both-varying combination at the reduced component level."""
    if fit is None:
        fit = fit_rem(data)
    a_eff = alpha_adjusted_level(alpha)
    if fit.tau2_hat == 0.0:
        return _maximal_all("ALPHA_ADJ", a_eff, a_eff)
    tau_iv = tau2_ci_qprofile(data, a_eff)
    absb_iv = abs_beta_ci(beta_ci(fit, a_eff))
    combined = combine_fixed(fit, tau_iv, absb_iv, "BOTH")
    return {
        m: replace(iv, method="ALPHA_ADJ") for m, iv in combined.items()
    }


def alpha_adjusted_interval(
    data: MetaDataset,
    measure: str,
    alpha: float = 0.05,
    fit: PooledFit | None = None,
) -> IntervalEstimate:
    """Single-measure view of :func:`alpha_adjusted_intervals`."""
    if measure not in RATIO_MEASURES:
        raise DomainError(f"measure must be one of {RATIO_MEASURES}, got {measure!r}")
    return alpha_adjusted_intervals(data, alpha, fit)[measure]


# ---------------------------------------------------------------------------
# propagating imprecision

def propimp_intervals(
    data: MetaDataset, alpha: float = 0.05, fit: PooledFit | None = None
) -> tuple[dict[str, IntervalEstimate], PropImpTrace]:
    """Propagating-imprecision intervals for all three measures.

    The overall critical value z is split between the two components
    along a quarter circle: at angle theta the tau component uses
    critical value z sin(theta) and the effect component z cos(theta),
    each mapped to a component interval at level 2 (1 - Phi(c)).  A
    critical value of 0 pins the parameter at its point estimate.  The
    lower bound minimizes the measure over theta with tau at its lower
    and |beta| at its upper component bound; the upper bound maximizes
    with the roles flipped.  The equal-split angle reproduces the
    adjusted combination, and the two endpoints reproduce the
    fixed-parameter intervals, so the result contains all three.

    Optimization is the grid-then-golden-section contract of
    :func:`cvmeta.numerics.optimize_1d` on the m1 scale, where the
    objective is bounded; cv and m2 bounds follow through the links.

    Returns
    -------
    (intervals, trace)
        intervals maps "CV_B", "M1", "M2" to IntervalEstimate; trace
        records the optimizing angles and objective evaluation count.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must be inside (0, 1), got {alpha!r}")
    if fit is None:
        fit = fit_rem(data)
    if fit.tau2_hat == 0.0:
        return _maximal_all("PROPIMP", alpha, alpha), PropImpTrace(0.0, 0.0, 0)

    y, v, k = data.effects, data.within_vars, data.k
    z = norm_quantile(1.0 - alpha / 2.0)
    tau_hat = math.sqrt(fit.tau2_hat)
    beta_hat = fit.beta_hat
    se_beta = math.sqrt(fit.var_beta_hat)

    state = {"warm_lo": None, "warm_hi": None, "evals": 0}

    def tau_bound(c: float, upper: bool) -> float:
        if c == 0.0:
            return tau_hat
        # component level for critical value c, then of the matching pivot:
        # the lower bound inverts the profile at the upper chi-square tail
        p_tail = norm_cdf(c)  # = 1 - alpha_c / 2
        target = _chisq_cached(p_tail if not upper else 1.0 - p_tail, k - 1)
        key = "warm_hi" if upper else "warm_lo"
        root = _qgen_root(y, v, target, state[key])
        state[key] = root
        return math.sqrt(root)

    def abs_beta_bounds(c: float) -> tuple[float, float]:
        if c == 0.0:
            b = abs(beta_hat)
            return b, b
        half = c * se_beta
        lo, hi = beta_hat - half, beta_hat + half
        if lo >= 0.0 and hi > 0.0:
            return lo, hi
        if hi <= 0.0 and lo < 0.0:
            return -hi, -lo
        return 0.0, max(-lo, hi)

    def objective_lower(theta: float) -> float:
        state["evals"] += 1
        c_tau = z * math.sin(theta)
        c_beta = z * math.cos(theta)
        _, b_up = abs_beta_bounds(c_beta)
        return _m1_corner(tau_bound(c_tau, upper=False), b_up)

    def objective_upper(theta: float) -> float:
        state["evals"] += 1
        c_tau = z * math.sin(theta)
        c_beta = z * math.cos(theta)
        b_lo, _ = abs_beta_bounds(c_beta)
        return _m1_corner(tau_bound(c_tau, upper=True), b_lo)

    theta_lo, m1_lo = optimize_1d(objective_lower, 0.0, _HALF_PI, mode="min", tol=1e-7)
    theta_hi, m1_hi = optimize_1d(objective_upper, 0.0, _HALF_PI, mode="max", tol=1e-7)
    trace = PropImpTrace(theta_lo, theta_hi, state["evals"])
    return _linked_intervals(m1_lo, m1_hi, "PROPIMP", alpha, alpha), trace


def propimp_interval(
    data: MetaDataset,
    measure: str,
    alpha: float = 0.05,
    fit: PooledFit | None = None,
) -> tuple[IntervalEstimate, PropImpTrace]:
    """Single-measure view of :func:`propimp_intervals`."""
    if measure not in RATIO_MEASURES:
        raise DomainError(f"measure must be one of {RATIO_MEASURES}, got {measure!r}")
    intervals, trace = propimp_intervals(data, alpha, fit)
    return intervals[measure], trace


# chi-square pivot evaluations dominate the optimizer's inner loop; the
# grid stage re-visits the same (p, df) pairs for every replication of a
# scenario, so a small cache pays for itself immediately
_PIVOT_CACHE: dict[tuple[float, int], float] = {}


def _chisq_cached(p: float, df: int) -> float:
    key = (p, df)
    hit = _PIVOT_CACHE.get(key)
    if hit is None:
        hit = chisq_quantile(p, df)
        if len(_PIVOT_CACHE) > 100_000:
            _PIVOT_CACHE.clear()
        _PIVOT_CACHE[key] = hit
    return hit
