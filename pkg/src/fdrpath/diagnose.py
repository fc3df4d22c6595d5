"""
Post-fitting model diagnosis.

The sample quantiles of z² are compared with the quantiles of the z² distribution
implied by the fitted mixture, and each pair is given an asymptotic p-value based
on the normal approximation of sample quantiles. A fit is flagged as potentially
anti-conservative if some fitted quantile falls significantly short of the sample
quantile.

No multiplicity correction is applied across the quantile levels, and neither the
correlation between the sample quantiles nor the fact that the fit used the same
data is accounted for.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import optimize, stats

from fdrpath.exceptions import DomainError, NumericError
from fdrpath.peb import MixtureFit
from fdrpath.statdist import ArrayLike
from fdrpath.util.types import Direction

DEFAULT_LEVELS: Tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)

DEFAULT_P_THRESHOLD = 0.05

# Fewer tests make the asymptotic p-values meaningless.
MIN_TESTS = 100

QUANTILE_XTOL = 1e-10


@dataclass(frozen=True, eq=False)
class SquaredMixture:
    """
    The distribution of z² for z following a mixture of centered normals.

    Each component N(0, v) of z contributes a component v chi-square(1) of z².

    Parameters
    ----------
    weights : array
        Mixture weights.
    variances : array
        Variances of the normal components of z.

    """

    weights: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        if len(self.weights) != len(self.variances) or len(self.weights) == 0:
            raise DomainError("weights", "need one weight per component")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1) > 1e-10:
            raise DomainError("weights", "weights must be non-negative and sum to 1")
        if np.any(~(self.variances > 0)):
            raise DomainError("variances", "variances must be positive")

    @staticmethod
    def from_fit(fit: MixtureFit) -> SquaredMixture:
        weights = fit.full_weights()
        return SquaredMixture(
            weights=weights / weights.sum(),
            variances=np.concatenate(([1.0], 1 + fit.grid.sigmas ** 2)),
        )

    def scaled(self, c: float) -> SquaredMixture:
        """The distribution of c z²."""

        if not c > 0:
            raise DomainError("c", "the scale factor must be positive")
        return SquaredMixture(weights=self.weights, variances=c * self.variances)

    def _active(self):
        active = self.weights > 0
        return self.weights[active], self.variances[active]

    def pdf(self, x: ArrayLike) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        weights, variances = self._active()
        return np.sum(
            weights * stats.chi2.pdf(x[..., np.newaxis] / variances, df=1) / variances,
            axis=-1,
        )

    def cdf(self, x: ArrayLike) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        weights, variances = self._active()
        return np.sum(
            weights * stats.chi2.cdf(x[..., np.newaxis] / variances, df=1), axis=-1
        )

    def quantile(self, p: float) -> float:
        if not 0 < p < 1:
            raise DomainError("level", f"quantile levels must lie in (0, 1), not {p}")
        _, variances = self._active()
        component_quantile = stats.chi2.ppf(p, df=1)
        lo = float(component_quantile * variances.min())
        hi = float(component_quantile * variances.max())
        if lo == hi:
            return lo
        return optimize.brentq(
            lambda x: float(self.cdf(x)) - p, lo, hi, xtol=QUANTILE_XTOL, rtol=1e-15
        )


class DiagnosisRow(NamedTuple):
    """
    The comparison of the sample and fitted quantiles at one level.

    Parameters
    ----------
    level : float
        Quantile level.
    sample_quantile : float
        Sample quantile of z².
    fitted_quantile : float
        Quantile of the fitted z² distribution.
    standard_error : float
        Asymptotic standard error of the sample quantile.
    z_statistic : float
        (sample - fitted) / standard error.
    p_value : float
        Two-sided asymptotic p-value.
    direction : Direction
        Direction of a significant mismatch.

    """

    level: float
    sample_quantile: float
    fitted_quantile: float
    standard_error: float
    z_statistic: float
    p_value: float
    direction: Direction


@dataclass(frozen=True)
class DiagnosisReport:
    """
    Quantile diagnosis of a fit.

    Parameters
    ----------
    rows : tuple of DiagnosisRow
        One row per quantile level.
    m : int
        Number of tests.
    p_threshold : float
        Threshold used for the directions.

    """

    rows: Tuple[DiagnosisRow, ...]
    m: int
    p_threshold: float = DEFAULT_P_THRESHOLD

    @property
    def levels(self) -> Tuple[float, ...]:
        return tuple(row.level for row in self.rows)

    @property
    def p_values(self) -> np.ndarray:
        return np.array([row.p_value for row in self.rows])


def _direction(
    sample: float, fitted: float, p_value: float, p_threshold: float
) -> Direction:
    if p_value > p_threshold:
        return Direction.NONE
    if fitted < sample:
        return Direction.FITTED_UNDER
    if fitted > sample:
        return Direction.FITTED_OVER
    return Direction.NONE


def diagnose_against(
    zsq: ArrayLike,
    dist: SquaredMixture,
    levels: Sequence[float] = DEFAULT_LEVELS,
    p_threshold: float = DEFAULT_P_THRESHOLD,
) -> DiagnosisReport:
    """
    Compare the sample quantiles of z² with those of a z² distribution.

    The standard error of the sample eta-quantile is
    sqrt(eta (1 - eta) / (m f(xi)²)), where xi is the distribution's eta-quantile
    and f its density.

    Parameters
    ----------
    zsq : array
        Squared z statistics, at least 100.
    dist : SquaredMixture
        Distribution to compare with.
    levels : sequence of float
        Quantile levels, in (0, 1).
    p_threshold : float
        p-value threshold for labelling the mismatch directions.

    Returns
    -------
    DiagnosisReport
        The diagnosis.

    """

    zsq = np.asarray(zsq, dtype=float)
    m = len(zsq)
    if m < MIN_TESTS:
        raise DomainError("zsq", f"at least {MIN_TESTS} statistics are needed, not {m}")
    if not 0 < p_threshold < 1:
        raise DomainError("p_threshold", f"must lie in (0, 1), not {p_threshold}")
    for level in levels:
        if not 0 < level < 1:
            raise DomainError("level", f"quantile levels must lie in (0, 1), not {level}")

    rows = []
    for level in levels:
        sample = float(np.quantile(zsq, level))
        fitted = dist.quantile(level)
        density = float(dist.pdf(fitted))
        if not density > 0:
            raise NumericError(f"The fitted density vanishes at the {level} quantile")
        standard_error = np.sqrt(level * (1 - level) / (m * density ** 2))
        z_statistic = (sample - fitted) / standard_error
        p_value = max(2 * stats.norm.sf(abs(z_statistic)), np.finfo(float).tiny)
        rows.append(
            DiagnosisRow(
                level=float(level),
                sample_quantile=sample,
                fitted_quantile=fitted,
                standard_error=float(standard_error),
                z_statistic=float(z_statistic),
                p_value=float(p_value),
                direction=_direction(sample, fitted, p_value, p_threshold),
            )
        )
    return DiagnosisReport(rows=tuple(rows), m=m, p_threshold=p_threshold)


def quantile_diagnosis(
    zsq: ArrayLike,
    fit: MixtureFit,
    levels: Sequence[float] = DEFAULT_LEVELS,
    p_threshold: float = DEFAULT_P_THRESHOLD,
) -> DiagnosisReport:
    """
    Compare the sample quantiles of z² with the quantiles implied by a fit.

    See diagnose_against for details.

    """

    return diagnose_against(zsq, SquaredMixture.from_fit(fit), levels, p_threshold)


def flag_anticonservative(
    report: DiagnosisReport, p_threshold: float = DEFAULT_P_THRESHOLD
) -> bool:
    """
    Whether some fitted quantile significantly under-estimates the sample quantile.

    Parameters
    ----------
    report : DiagnosisReport
        Diagnosis.
    p_threshold : float
        p-value threshold, in (0, 1).

    Returns
    -------
    bool
        True if for some level the fitted quantile is less than the sample quantile
        and the p-value does not exceed the threshold.

    """

    if not 0 < p_threshold < 1:
        raise DomainError("p_threshold", f"must lie in (0, 1), not {p_threshold}")
    return any(
        row.fitted_quantile < row.sample_quantile and row.p_value <= p_threshold
        for row in report.rows
    )


def report_table(report: DiagnosisReport) -> pd.DataFrame:
    """
    The diagnosis as a table with the rows sample quantile, fitted quantile and
    p-value, and one column per quantile level.

    """

    columns = [f"{100 * level:g}%" for level in report.levels]
    return pd.DataFrame(
        [
            [row.sample_quantile for row in report.rows],
            [row.fitted_quantile for row in report.rows],
            [row.p_value for row in report.rows],
        ],
        index=pd.Index(["sample quantile", "fitted quantile", "p-value"], name=""),
        columns=columns,
    )
