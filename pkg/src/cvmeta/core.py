"""Study-level data model and inverse-variance pooling.

Fixed-effect and random-effects pooling, the weighted dispersion
statistic Q, the moment estimator of the between-study variance with
truncation at zero, its large-sample variance, and the comparison
measures I-squared, diamond ratio, and R_b.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DataFormatError, DegenerateWeightsError

__all__ = [
    "StudyRecord",
    "MetaDataset",
    "WeightSums",
    "PooledFit",
    "HetMeasures",
    "weight_sums",
    "pooled_estimate",
    "cochran_q",
    "dl_tau2",
    "var_q",
    "var_tau2",
    "i_squared",
    "r_b",
    "diamond_ratio",
    "fit_fem",
    "fit_rem",
]


@dataclass(frozen=True)
class StudyRecord:
    """One study's observed effect and within-study variance.

    Attributes
    ----------
    effect : float
        Observed effect size, any finite real.
    within_var : float
        Sampling variance of the effect, finite and positive.
    label : str
        Optional study identifier for reports.
    """

    effect: float
    within_var: float
    label: str = ""

    def __post_init__(self):
        if not np.isfinite(self.effect):
            raise DataFormatError(f"study effect must be finite, got {self.effect!r}")
        if not (np.isfinite(self.within_var) and self.within_var > 0):
            raise DataFormatError(
                f"within-study variance must be positive and finite, got {self.within_var!r}"
            )


class MetaDataset:
    """Ordered collection of at least two studies.

    Internally stores effect and variance arrays; the per-study view is
    available through :attr:`studies`.  Arrays are write-protected so a
    dataset can be shared freely across threads.
    """

    __slots__ = ("_effects", "_within_vars", "_labels")

    def __init__(self, studies: Iterable[StudyRecord]):
        records = tuple(studies)
        if len(records) < 2:
            raise DataFormatError(
                f"a meta-analysis needs at least 2 studies, got {len(records)}"
            )
        self._effects = np.array([s.effect for s in records], dtype=float)
        self._within_vars = np.array([s.within_var for s in records], dtype=float)
        self._labels = tuple(s.label for s in records)
        self._effects.setflags(write=False)
        self._within_vars.setflags(write=False)

    @classmethod
    def from_arrays(cls, effects, within_vars, labels: Sequence[str] | None = None):
        """Build a dataset from parallel arrays without per-study objects."""
        y = np.asarray(effects, dtype=float)
        v = np.asarray(within_vars, dtype=float)
        if y.ndim != 1 or v.shape != y.shape:
            raise DataFormatError(
                f"effects and variances must be equal-length 1-D arrays, "
                f"got shapes {y.shape} and {v.shape}"
            )
        if y.size < 2:
            raise DataFormatError(f"a meta-analysis needs at least 2 studies, got {y.size}")
        if not np.all(np.isfinite(y)):
            raise DataFormatError("all effects must be finite")
        if not (np.all(np.isfinite(v)) and np.all(v > 0)):
            raise DataFormatError("all within-study variances must be positive and finite")
        obj = cls.__new__(cls)
        obj._effects = y.copy()
        obj._within_vars = v.copy()
        obj._effects.setflags(write=False)
        obj._within_vars.setflags(write=False)
        obj._labels = tuple(labels) if labels is not None else ("",) * y.size
        if len(obj._labels) != y.size:
            raise DataFormatError("labels length must match the number of studies")
        return obj

    @property
    def effects(self) -> np.ndarray:
        return self._effects

    @property
    def within_vars(self) -> np.ndarray:
        return self._within_vars

    @property
    def labels(self) -> tuple:
        return self._labels

    @property
    def k(self) -> int:
        """Number of studies."""
        return self._effects.size

    @property
    def studies(self) -> tuple:
        return tuple(
            StudyRecord(float(y), float(v), lab)
            for y, v, lab in zip(self._effects, self._within_vars, self._labels)
        )

    def __len__(self) -> int:
        return self.k

    def __repr__(self) -> str:
        return f"MetaDataset(k={self.k})"


@dataclass(frozen=True)
class WeightSums:
    """Power sums S_r of the fixed-effect weights 1/v_i, r = 1, 2, 3."""

    s1: float
    s2: float
    s3: float

    def __post_init__(self):
        if not (self.s1 > 0 and self.s2 > 0 and self.s3 > 0):
            raise DegenerateWeightsError(
                f"weight sums must be positive, got {(self.s1, self.s2, self.s3)}"
            )


@dataclass(frozen=True)
class PooledFit:
    """Pooled estimate and heterogeneity machinery for one dataset.

    Attributes
    ----------
    beta_hat : float
        Inverse-variance weighted pooled effect.
    tau2_hat : float
        Between-study variance estimate (moment estimator), truncated at 0.
    q : float
        Weighted dispersion statistic of effects around the fixed-effect fit.
    var_beta_hat : float
        1 / sum of the model weights 1/(v_i + tau2_hat).
    var_tau2_hat : float
        Large-sample variance of the untruncated between-study variance
        estimator, evaluated at the plug-in tau2_hat.
    weight_sums : WeightSums
    k : int
    model : str
        "FEM" or "REM".
    """

    beta_hat: float
    tau2_hat: float
    q: float
    var_beta_hat: float
    var_tau2_hat: float
    weight_sums: WeightSums
    k: int
    model: str = "REM"


@dataclass(frozen=True)
class HetMeasures:
    """Point values of the heterogeneity measures for one fit.

    i2, rb, m1, m2 lie in [0, 1]; dr is at least 1; cv_b is nonnegative
    and may be infinite when the pooled effect is zero.
    """

    i2: float
    dr: float
    rb: float
    cv_b: float
    m1: float
    m2: float


def weight_sums(data: MetaDataset) -> WeightSums:
    """Power sums of the fixed-effect weights for a dataset."""
    w = 1.0 / data.within_vars
    return WeightSums(float(w.sum()), float((w * w).sum()), float((w**3).sum()))


def pooled_estimate(data: MetaDataset, tau2: float) -> tuple[float, float]:
    """Inverse-variance pooled effect at a given between-study variance.

    Weights are 1/(v_i + tau2); tau2 = 0 gives the fixed-effect fit.

    Returns
    -------
    (beta_hat, var_beta_hat) : tuple of float
        The weighted mean and the inverse of the total weight.
    """
    if tau2 < 0:
        raise DataFormatError(f"tau2 must be nonnegative, got {tau2!r}")
    w = 1.0 / (data.within_vars + tau2)
    total = w.sum()
    return float((w * data.effects).sum() / total), float(1.0 / total)


def cochran_q(data: MetaDataset) -> float:
    """Weighted dispersion of effects around the fixed-effect estimate.

    Computed from the definitional moment form
    Q = sum_i W_i (Y_i - beta_fem)^2 with W_i = 1/v_i.
    """
    beta_fem, _ = pooled_estimate(data, 0.0)
    w = 1.0 / data.within_vars
    return float((w * (data.effects - beta_fem) ** 2).sum())


def dl_tau2(data: MetaDataset) -> tuple[float, float]:
    """Moment estimator of the between-study variance, truncated at zero.

    Returns
    -------
    (tau2, untruncated) : tuple of float
        The truncated estimate max(0, .) and the raw moment value, which
        is useful for diagnostics on the truncation rate.

    Raises
    ------
    DegenerateWeightsError
        If the weight normalization S1 - S2/S1 is not positive.
    """
    s = weight_sums(data)
    denom = s.s1 - s.s2 / s.s1
    if denom <= 0:
        raise DegenerateWeightsError(
            f"S1 - S2/S1 = {denom!r} is not positive; moment estimator undefined"
        )
    q = cochran_q(data)
    untrunc = (q - (data.k - 1)) / denom
    return max(0.0, untrunc), untrunc


def var_q(ws: WeightSums, k: int, tau2: float) -> float:
    """Large-sample variance of the dispersion statistic Q.

    Quadratic in the between-study variance:
    2(K-1) + c1 tau2 + c2 tau2^2 with
    c1 = 4 (S1 - S2/S1) and c2 = 2 (S2 - 2 S3/S1 + S2^2/S1^2).
    """
    if tau2 < 0:
        raise DataFormatError(f"tau2 must be nonnegative, got {tau2!r}")
    c1 = 4.0 * (ws.s1 - ws.s2 / ws.s1)
    c2 = 2.0 * (ws.s2 - 2.0 * ws.s3 / ws.s1 + ws.s2**2 / ws.s1**2)
    return float(2.0 * (k - 1) + c1 * tau2 + c2 * tau2 * tau2)


def var_tau2(data: MetaDataset, tau2: float) -> float:
    """Large-sample variance of the untruncated moment estimator.

    Var(Q) scaled by the squared weight normalization; truncation is
    deliberately ignored, matching the delta-method usage downstream.
    """
    s = weight_sums(data)
    denom = s.s1 - s.s2 / s.s1
    if denom <= 0:
        raise DegenerateWeightsError(
            f"S1 - S2/S1 = {denom!r} is not positive; variance undefined"
        )
    return var_q(s, data.k, tau2) / (denom * denom)


def i_squared(q: float, k: int) -> float:
    """Share of total dispersion attributed to between-study variation.

    max(0, (Q - (K-1))/Q), with the 0/0 case at Q = 0 mapped to 0.
    """
    if k < 2:
        raise DataFormatError(f"i_squared needs k >= 2, got {k}")
    if q <= 0.0:
        return 0.0
    return max(0.0, (q - (k - 1)) / q)


def r_b(data: MetaDataset, tau2: float) -> float:
    """Average share of each study's total variance due to heterogeneity.

    (1/K) sum_i tau2/(v_i + tau2), bounded in [0, 1].
    """
    if tau2 < 0:
        raise DataFormatError(f"tau2 must be nonnegative, got {tau2!r}")
    if tau2 == 0.0:
        return 0.0
    return float(np.mean(tau2 / (data.within_vars + tau2)))


def diamond_ratio(data: MetaDataset, tau2: float) -> float:
    """Ratio of random-effects to fixed-effect pooled-estimate widths.

    sqrt of the ratio of the two pooled variances; at least 1 because
    adding tau2 can only inflate each study's variance.
    """
    _, var_re = pooled_estimate(data, tau2)
    _, var_fe = pooled_estimate(data, 0.0)
    return float(np.sqrt(var_re / var_fe))


def fit_fem(data: MetaDataset) -> PooledFit:
    """Fixed-effect fit: pooled estimate with tau2 pinned to zero."""
    beta, var_beta = pooled_estimate(data, 0.0)
    s = weight_sums(data)
    q = cochran_q(data)
    denom = s.s1 - s.s2 / s.s1
    vt2 = var_q(s, data.k, 0.0) / (denom * denom) if denom > 0 else 0.0
    return PooledFit(beta, 0.0, q, var_beta, vt2, s, data.k, model="FEM")


def fit_rem(data: MetaDataset) -> PooledFit:
    """Random-effects fit with the moment estimator of tau2.

    The variance of the tau2 estimator is evaluated at the truncated
    plug-in value.
    """
    tau2, _ = dl_tau2(data)
    beta, var_beta = pooled_estimate(data, tau2)
    s = weight_sums(data)
    q = cochran_q(data)
    denom = s.s1 - s.s2 / s.s1
    vt2 = var_q(s, data.k, tau2) / (denom * denom)
    return PooledFit(beta, tau2, q, var_beta, vt2, s, data.k, model="REM")
