"""Heterogeneity relative to effect size: the ratio measures and their moments.

The between-study coefficient of variation cv_b = tau/|beta| compares the
spread of true effects to their typical size.  Two rescalings map it onto
[0, 1]: m1 = tau/(tau + |beta|) on the linear scale and
m2 = tau^2/(tau^2 + beta^2) on the squared scale.  On the logit scale the
three are the same object up to a factor, which is what makes a single
delta-method variance serve all of them:

    logit(m1) = log(cv_b)        logit(m2) = 2 log(cv_b)

Delta-method variance and bias for logit(m1) are provided along with the
small-within-variance diagnostic forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import HetMeasures, MetaDataset, PooledFit, diamond_ratio, i_squared, r_b
from .errors import DomainError, UndefinedMomentsError

__all__ = [
    "CvMeasure",
    "LogitMoments",
    "cv_measures",
    "measures_from_cv",
    "logit",
    "inv_logit",
    "logit_m1_moments",
    "small_v_moments",
    "het_measures",
]


@dataclass(frozen=True)
class CvMeasure:
    """Point values of the three ratio measures for one (tau, beta).

    cv_b is nonnegative and may be math.inf (zero pooled effect with
    positive heterogeneity); m1 and m2 always lie in [0, 1], and both
    equal 1 exactly when cv_b is infinite.
    """

    cv_b: float
    m1: float
    m2: float


@dataclass(frozen=True)
class LogitMoments:
    """Delta-method variance and bias of the logit-scale measures.

    The squared-scale entries are fixed multiples of the linear-scale
    ones (factor 4 for the variance, 2 for the bias) because the two
    logits differ by a constant factor.
    """

    var_logit_m1: float
    bias_logit_m1: float
    var_logit_m2: float
    bias_logit_m2: float


def cv_measures(tau: float, beta: float) -> CvMeasure:
    """Ratio measures of heterogeneity relative to effect size.

    Parameters
    ----------
    tau : float
        Between-study standard deviation, nonnegative.
    beta : float
        Pooled effect; only |beta| matters.

    Returns
    -------
    CvMeasure
        tau = 0 gives the all-zero measure (whatever beta, including 0).
        beta = 0 with tau > 0 gives cv_b = inf and m1 = m2 = 1.
    """
    if tau < 0:
        raise DomainError(f"tau must be nonnegative, got {tau!r}")
    if tau == 0.0:
        return CvMeasure(0.0, 0.0, 0.0)
    b = abs(beta)
    if b == 0.0:
        return CvMeasure(math.inf, 1.0, 1.0)
    cv = tau / b
    return CvMeasure(cv, tau / (tau + b), tau * tau / (tau * tau + b * b))


def measures_from_cv(cv_b: float) -> CvMeasure:
    """Rebuild the measure triple from a coefficient-of-variation value."""
    if cv_b < 0:
        raise DomainError(f"cv_b must be nonnegative, got {cv_b!r}")
    if math.isinf(cv_b):
        return CvMeasure(math.inf, 1.0, 1.0)
    return CvMeasure(cv_b, cv_b / (1.0 + cv_b), cv_b * cv_b / (1.0 + cv_b * cv_b))


def logit(u: float) -> float:
    """log(u/(1-u)) for u strictly inside (0, 1)."""
    if not 0.0 < u < 1.0:
        raise DomainError(f"logit requires 0 < u < 1, got {u!r}")
    return math.log(u / (1.0 - u))


def inv_logit(x: float) -> float:
    """Inverse of :func:`logit`; maps the real line onto (0, 1).

    Evaluated in the numerically stable split form so large |x| cannot
    overflow.
    """
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def logit_m1_moments(fit: PooledFit) -> LogitMoments:
    """Delta-method variance and bias of logit(m1) at plug-in estimates.

    var  = Var(T2)/(4 T2^2) + Var(B)/B^2
    bias = (Var(B)/B^2 - Var(T2)/(2 T2^2)) / 2

    with T2 the between-study variance estimate and B the pooled effect,
    both taken from the fit together with their estimated variances.
    The squared-scale measure gets 4x the variance and 2x the bias.

    Raises
    ------
    UndefinedMomentsError
        If tau2_hat is 0 or beta_hat is exactly 0: the formulas divide
        by both, and callers should switch to degenerate intervals.
    """
    t2 = fit.tau2_hat
    b = fit.beta_hat
    if t2 <= 0.0 or b == 0.0:
        raise UndefinedMomentsError(
            f"moments need tau2_hat > 0 and beta_hat != 0, got ({t2!r}, {b!r})"
        )
    var_ratio_t = fit.var_tau2_hat / (t2 * t2)
    var_ratio_b = fit.var_beta_hat / (b * b)
    var1 = var_ratio_t / 4.0 + var_ratio_b
    bias1 = 0.5 * (var_ratio_b - var_ratio_t / 2.0)
    return LogitMoments(var1, bias1, 4.0 * var1, 2.0 * bias1)


def small_v_moments(ws, k: int, tau: float, beta: float) -> tuple[float, float]:
    """Diagnostic variance and bias of logit(m1) when v_i << tau^2.

    Closed forms that drop the within-study variance contribution to the
    pooled effect:

    var  = (S2 - 2 S3/S1 + S2^2/S1^2)/2 + (tau^2/beta^2)/K
    bias = ((tau^2/beta^2)/K - (S2 - 2 S3/S1 + S2^2/S1^2))/2

    Shipped for regime diagnostics only; interval construction never
    calls this.
    """
    if tau <= 0:
        raise DomainError(f"tau must be positive, got {tau!r}")
    if beta == 0:
        raise DomainError("beta must be nonzero")
    spread = ws.s2 - 2.0 * ws.s3 / ws.s1 + ws.s2**2 / ws.s1**2
    ratio = (tau * tau) / (beta * beta) / k
    return spread / 2.0 + ratio, (ratio - spread) / 2.0


def het_measures(data: MetaDataset, fit: PooledFit) -> HetMeasures:
    """All heterogeneity measures for a fitted dataset."""
    cm = cv_measures(math.sqrt(fit.tau2_hat), fit.beta_hat)
    return HetMeasures(
        i2=i_squared(fit.q, fit.k),
        dr=diamond_ratio(data, fit.tau2_hat),
        rb=r_b(data, fit.tau2_hat),
        cv_b=cm.cv_b,
        m1=cm.m1,
        m2=cm.m2,
    )
