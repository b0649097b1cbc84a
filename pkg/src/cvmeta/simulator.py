"""Monte Carlo coverage and summary studies for the ratio measures.

Two generators: standardized mean differences sampled through the exact
noncentral-t construction with per-study arm sizes, and normal effects
with fixed within-study variances taken from published settings.  The
driver scores, for each requested interval construction, how often the
interval covers the true measure value implied by the scenario's
(beta, tau), together with interval widths and the rate at which the
between-study variance estimate truncates to zero.

Replications are keyed by (seed, replication index) through independent
counter-based streams, and results are reduced in replication order, so
a scenario's output is bit-identical across runs and across worker
counts.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import MetaDataset, fit_rem
from .errors import ConfigError
from .intervals import (
    RATIO_MEASURES,
    alpha_adjusted_intervals,
    propimp_intervals,
    wald_logit_intervals,
)
from .measures import cv_measures, het_measures
from .numerics import RngState, sample_noncentral_t

__all__ = [
    "SIM_METHODS",
    "Scenario",
    "WidthSummary",
    "MethodCoverage",
    "CoverageResult",
    "FiveNumber",
    "generate_smd_dataset",
    "generate_normal_dataset",
    "run_scenario",
    "measure_summary",
]

SIM_METHODS = ("WALD", "ALPHA_ADJ", "PROPIMP")
SUMMARY_MEASURES = ("I2", "CV_B", "M1", "M2")


@dataclass(frozen=True)
class Scenario:
    """One simulation setting.

    Exactly one of ``arm_sizes`` (standardized-mean-difference mode) and
    ``within_vars`` (normal mode) must be present.  ``k`` is the study
    count and must match the per-study list; 0 means derive it.

    Attributes
    ----------
    beta : float
        True pooled effect.
    tau : float
        True between-study standard deviation, nonnegative.
    arm_sizes : tuple of (int, int) or None
        Per-study two-arm sample sizes.
    within_vars : tuple of float or None
        Per-study within-study variances.
    reps : int
    methods : tuple of str
        Subset of SIM_METHODS.
    alpha : float
    seed : int
    k : int
    """

    beta: float
    tau: float
    arm_sizes: tuple | None = None
    within_vars: tuple | None = None
    reps: int = 2000
    methods: tuple = SIM_METHODS
    alpha: float = 0.05
    seed: int = 0
    k: int = 0

    def __post_init__(self):
        if (self.arm_sizes is None) == (self.within_vars is None):
            raise ConfigError("exactly one of arm_sizes/within_vars must be given")
        if self.arm_sizes is not None:
            sizes = tuple((int(a), int(b)) for a, b in self.arm_sizes)
            for n1, n2 in sizes:
                if n1 + n2 <= 2:
                    raise ConfigError(f"arm sizes must satisfy n1 + n2 > 2, got {(n1, n2)}")
            object.__setattr__(self, "arm_sizes", sizes)
            derived = len(sizes)
        else:
            vs = tuple(float(x) for x in self.within_vars)
            if any(not (math.isfinite(x) and x > 0) for x in vs):
                raise ConfigError("within_vars must all be positive and finite")
            object.__setattr__(self, "within_vars", vs)
            derived = len(vs)
        if derived < 2:
            raise ConfigError(f"a scenario needs at least 2 studies, got {derived}")
        if self.k == 0:
            object.__setattr__(self, "k", derived)
        elif self.k != derived:
            raise ConfigError(f"k={self.k} does not match the {derived} per-study entries")
        if self.tau < 0:
            raise ConfigError(f"tau must be nonnegative, got {self.tau!r}")
        if self.reps < 1:
            raise ConfigError(f"reps must be at least 1, got {self.reps!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must be inside (0, 1), got {self.alpha!r}")
        methods = tuple(str(m).upper() for m in self.methods)
        unknown = [m for m in methods if m not in SIM_METHODS]
        if unknown:
            raise ConfigError(f"unknown methods {unknown}; choose from {SIM_METHODS}")
        if not methods:
            raise ConfigError("at least one method is required")
        object.__setattr__(self, "methods", methods)

    @property
    def mode(self) -> str:
        return "smd" if self.arm_sizes is not None else "normal"


@dataclass(frozen=True)
class WidthSummary:
    """Mean and median interval width over replications.

    any_infinite marks that at least one replication produced an
    infinite width (the mean is then infinite and the median is the
    usable statistic).
    """

    mean: float
    median: float
    any_infinite: bool


@dataclass(frozen=True)
class MethodCoverage:
    method: str
    coverage: float
    widths: dict  # measure tag -> WidthSummary


@dataclass(frozen=True)
class CoverageResult:
    """Empirical coverage and widths for one scenario."""

    scenario: Scenario
    per_method: tuple
    truncation_rate: float

    def method(self, name: str) -> MethodCoverage:
        for mc in self.per_method:
            if mc.method == name.upper():
                return mc
        raise KeyError(name)


@dataclass(frozen=True)
class FiveNumber:
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float


def generate_smd_dataset(scenario: Scenario, rng: np.random.Generator) -> MetaDataset:
    """Standardized-mean-difference dataset via noncentral-t sampling.

    For each study the true effect is beta plus a between-study normal
    deviation; the observed effect is a noncentral-t draw scaled by
    m = sqrt(1/n1 + 1/n2) with noncentrality theta/m on n1 + n2 - 2
    degrees of freedom.  The within-study variance is the usual
    large-sample form 1/n1 + 1/n2 + y^2 / (2 (n1 + n2)).
    """
    if scenario.arm_sizes is None:
        raise ConfigError("generate_smd_dataset requires arm_sizes mode")
    n1 = np.array([a for a, _ in scenario.arm_sizes], dtype=float)
    n2 = np.array([b for _, b in scenario.arm_sizes], dtype=float)
    m = np.sqrt(1.0 / n1 + 1.0 / n2)
    df = n1 + n2 - 2.0
    theta = scenario.beta + rng.normal(0.0, scenario.tau, scenario.k)
    t = sample_noncentral_t(df, theta / m, rng)
    y = t * m
    v = 1.0 / n1 + 1.0 / n2 + y * y / (2.0 * (n1 + n2))
    return MetaDataset.from_arrays(y, v)


def generate_normal_dataset(scenario: Scenario, rng: np.random.Generator) -> MetaDataset:
    """Normal-effects dataset at fixed within-study variances."""
    if scenario.within_vars is None:
        raise ConfigError("generate_normal_dataset requires within_vars mode")
    v = np.asarray(scenario.within_vars, dtype=float)
    theta = scenario.beta + rng.normal(0.0, scenario.tau, scenario.k)
    y = rng.normal(theta, np.sqrt(v))
    return MetaDataset.from_arrays(y, v)


def _generate(scenario: Scenario, rng: np.random.Generator) -> MetaDataset:
    if scenario.mode == "smd":
        return generate_smd_dataset(scenario, rng)
    return generate_normal_dataset(scenario, rng)


def _intervals_for(method: str, data, fit, alpha):
    if method == "WALD":
        return wald_logit_intervals(fit, alpha)
    if method == "ALPHA_ADJ":
        return alpha_adjusted_intervals(data, alpha, fit)
    if method == "PROPIMP":
        return propimp_intervals(data, alpha, fit)[0]
    raise ConfigError(f"unknown method {method!r}")


def _run_range(scenario: Scenario, start: int, stop: int):
    """Score replications [start, stop); returns per-rep arrays.

    Coverage is decided once per method on the m1 scale; the three
    measures share the containment event because their intervals and
    true values are the same monotone transforms of the same bounds.
    """
    n = stop - start
    n_methods = len(scenario.methods)
    covered = np.zeros((n_methods, n), dtype=np.uint8)
    widths = np.zeros((n_methods, len(RATIO_MEASURES), n), dtype=float)
    truncated = np.zeros(n, dtype=np.uint8)
    true_m1 = cv_measures(scenario.tau, scenario.beta).m1
    master = RngState(scenario.seed)

    for j in range(n):
        rng = master.stream(start + j)
        data = _generate(scenario, rng)
        fit = fit_rem(data)
        if fit.tau2_hat == 0.0:
            truncated[j] = 1
        for mi, method in enumerate(scenario.methods):
            ivs = _intervals_for(method, data, fit, scenario.alpha)
            covered[mi, j] = 1 if ivs["M1"].contains(true_m1) else 0
            for qi, measure in enumerate(RATIO_MEASURES):
                widths[mi, qi, j] = ivs[measure].width
    return covered, widths, truncated


def run_scenario(scenario: Scenario, threads: int = 1) -> CoverageResult:
    """Run all replications of a scenario and summarize.

    Parameters
    ----------
    scenario : Scenario
    threads : int
        Worker processes.  Replications are partitioned into contiguous
        chunks and reassembled by index, so the output is identical for
        any thread count.

    Returns
    -------
    CoverageResult
    """
    reps = scenario.reps
    if threads <= 1 or reps < 2:
        covered, widths, truncated = _run_range(scenario, 0, reps)
    else:
        n_methods = len(scenario.methods)
        covered = np.zeros((n_methods, reps), dtype=np.uint8)
        widths = np.zeros((n_methods, len(RATIO_MEASURES), reps), dtype=float)
        truncated = np.zeros(reps, dtype=np.uint8)
        chunk = max(1, -(-reps // threads))
        ranges = [(s, min(s + chunk, reps)) for s in range(0, reps, chunk)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_run_range, scenario, s, e) for s, e in ranges]
            for (s, e), fut in zip(ranges, futures):
                c, w, t = fut.result()
                covered[:, s:e] = c
                widths[:, :, s:e] = w
                truncated[s:e] = t

    per_method = []
    for mi, method in enumerate(scenario.methods):
        width_stats = {}
        for qi, measure in enumerate(RATIO_MEASURES):
            col = widths[mi, qi]
            any_inf = bool(np.isinf(col).any())
            width_stats[measure] = WidthSummary(
                mean=float(np.mean(col)),
                median=float(np.median(col)),
                any_infinite=any_inf,
            )
        per_method.append(
            MethodCoverage(
                method=method,
                coverage=float(covered[mi].sum() / reps),
                widths=width_stats,
            )
        )
    return CoverageResult(
        scenario=scenario,
        per_method=tuple(per_method),
        truncation_rate=float(truncated.sum() / reps),
    )


def measure_summary(scenario: Scenario) -> dict:
    """Five-number summaries of the fitted measures over replications.

    Returns a dict mapping "I2", "CV_B", "M1", "M2" to FiveNumber with
    quartiles computed by linear interpolation.
    """
    reps = scenario.reps
    master = RngState(scenario.seed)
    values = {m: np.zeros(reps) for m in SUMMARY_MEASURES}
    for r in range(reps):
        rng = master.stream(r)
        data = _generate(scenario, rng)
        fit = fit_rem(data)
        hm = het_measures(data, fit)
        values["I2"][r] = hm.i2
        values["CV_B"][r] = hm.cv_b
        values["M1"][r] = hm.m1
        values["M2"][r] = hm.m2
    out = {}
    for m, arr in values.items():
        qs = np.percentile(arr, [0, 25, 50, 75, 100], method="linear")
        out[m] = FiveNumber(*(float(x) for x in qs))
    return out
