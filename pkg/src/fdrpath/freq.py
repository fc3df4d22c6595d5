"""
Frequentist FDR procedures: two-sided p-values, quantile estimates of the null
proportion, Benjamini-Hochberg and q-value rejection paths.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import stats

from fdrpath.exceptions import DomainError
from fdrpath.rpath import RejectionPath
from fdrpath.statdist import ArrayLike
from fdrpath.twogroups import pvalue_of_zsq
from fdrpath.util.types import Pi0Source

# Default tuning quantile of the null proportion estimators.
DEFAULT_ETA = 0.5


@dataclass(frozen=True)
class Pi0Estimate:
    """
    An estimate of the proportion of null tests.

    Parameters
    ----------
    value : float
        The estimate, in (0, 1].
    eta : float, optional
        Tuning quantile, in (0, 1). Only quantile estimators have one.
    source : Pi0Source
        How the estimate was obtained.

    """

    value: float
    eta: Optional[float]
    source: Pi0Source

    def __post_init__(self):
        if not 0 < self.value <= 1:
            raise DomainError("value", f"pi0 must lie in (0, 1], not {self.value}")
        if self.eta is not None and not 0 < self.eta < 1:
            raise DomainError("eta", f"must lie in (0, 1), not {self.eta}")

    @staticmethod
    def one() -> Pi0Estimate:
        return Pi0Estimate(value=1.0, eta=None, source=Pi0Source.FIXED_ONE)

    @staticmethod
    def oracle(pi0: float) -> Pi0Estimate:
        return Pi0Estimate(value=float(pi0), eta=None, source=Pi0Source.ORACLE)


def pvalue_two_sided(z: ArrayLike) -> np.ndarray:
    """
    Two-sided p-value(s) of z statistic(s), i.e. the chi-square(1) survival function
    at z².

    """

    z = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(z)):
        raise DomainError("z", "z statistics must be finite")
    return pvalue_of_zsq(z ** 2)


def pvalue_to_z(p: ArrayLike) -> np.ndarray:
    """
    The non-negative z statistic(s) with the given two-sided p-value(s).

    Raises
    ------
    DomainError
        If a p-value lies outside (0, 1].

    """

    p = np.asarray(p, dtype=float)
    _check_pvalues(p)
    return stats.norm.isf(p / 2)


def _check_eta(eta: float) -> None:
    if not 0 < eta < 1:
        raise DomainError("eta", f"must lie in (0, 1), not {eta}")


def _check_pvalues(p: np.ndarray) -> None:
    if len(np.atleast_1d(p)) == 0:
        raise DomainError("pvalues", "at least one p-value is needed")
    if np.any(~(p > 0)) or np.any(~(p <= 1)):
        raise DomainError("pvalues", "p-values must lie in (0, 1]")


def _quantile_estimate(count: int, m: int, fraction: float) -> float:
    # at least one test is counted, so that the estimate stays positive
    return min(1.0, max(count, 1) / (m * fraction))


def pi0_quantile_estimate(pvalues: ArrayLike, eta: float = DEFAULT_ETA) -> Pi0Estimate:
    """
    Conservative estimate of the null proportion from the upper tail of the
    p-values.

    The estimate is min(1, #{p_i >= eta} / (m (1 - eta))). Null p-values are
    uniform and alternative p-values are assumed to rarely exceed eta, so that the
    estimate is an upper bound of the null proportion. If no p-value reaches eta, a
    count of 1 is used instead.

    Parameters
    ----------
    pvalues : array
        p-values.
    eta : float
        Tuning quantile, in (0, 1).

    Returns
    -------
    Pi0Estimate
        The estimate.

    """

    _check_eta(eta)
    p = np.asarray(pvalues, dtype=float)
    if p.size == 0:
        raise DomainError("pvalues", "at least one p-value is needed")
    count = int(np.count_nonzero(p >= eta))
    return Pi0Estimate(
        value=_quantile_estimate(count, p.size, 1 - eta),
        eta=eta,
        source=Pi0Source.QUANTILE_OF_P,
    )


def pi0_zsq_estimate(zsq: ArrayLike, eta: float = DEFAULT_ETA) -> Pi0Estimate:
    """
    Conservative estimate of the null proportion from the lower tail of z².

    The estimate is min(1, #{z²_i <= chi2_eta} / (m eta)), where chi2_eta is the
    eta-quantile of the chi-square(1) distribution. As z² <= chi2_eta exactly when
    the two-sided p-value is at least 1 - eta, this is the p-value estimate with
    tuning quantile 1 - eta; for the default eta = 0.5 the two coincide.

    Parameters
    ----------
    zsq : array
        Squared z statistics.
    eta : float
        Tuning quantile, in (0, 1).

    Returns
    -------
    Pi0Estimate
        The estimate.

    """

    _check_eta(eta)
    zsq = np.asarray(zsq, dtype=float)
    if zsq.size == 0:
        raise DomainError("zsq", "at least one statistic is needed")
    threshold = stats.chi2.ppf(eta, df=1)
    count = int(np.count_nonzero(zsq <= threshold))
    return Pi0Estimate(
        value=_quantile_estimate(count, zsq.size, eta),
        eta=eta,
        source=Pi0Source.QUANTILE_OF_ZSQ,
    )


def _pi0_value(pi0: Union[Pi0Estimate, float]) -> float:
    return pi0.value if isinstance(pi0, Pi0Estimate) else float(pi0)


def fdr_estimate_at(
    t: float, pvalues: ArrayLike, pi0: Union[Pi0Estimate, float]
) -> float:
    """
    Asymptotic estimate of the FDR when rejecting all tests with p-value <= t.

    The estimate is m pi0 t / max(1, #{p_i <= t}). It is not clamped and may exceed
    1 for large t.

    Parameters
    ----------
    t : float
        p-value threshold, in [0, 1].
    pvalues : array
        p-values.
    pi0 : Pi0Estimate or float
        Null proportion.

    Returns
    -------
    float
        The FDR estimate.

    """

    if not 0 <= t <= 1:
        raise DomainError("t", f"must lie in [0, 1], not {t}")
    p = np.asarray(pvalues, dtype=float)
    rejections = int(np.count_nonzero(p <= t))
    return p.size * _pi0_value(pi0) * t / max(1, rejections)


def pvalue_path(
    pvalues: ArrayLike, pi0: Union[Pi0Estimate, float], label: str
) -> RejectionPath:
    """
    The rejection path of the p-value procedure with a given null proportion.

    Tests are ordered by p-value, ties by their index. The FDR estimate at
    position i is m pi0 p_(i) / #{j : p_j <= p_(i)}, clamped to [0, 1], so that
    tied tests share one value.

    Parameters
    ----------
    pvalues : array
        p-values, in (0, 1].
    pi0 : Pi0Estimate or float
        Null proportion.
    label : str
        Procedure name.

    Returns
    -------
    RejectionPath
        The rejection path.

    """

    p = np.asarray(pvalues, dtype=float)
    _check_pvalues(p)
    if not isinstance(pi0, Pi0Estimate):
        pi0 = Pi0Estimate(value=float(pi0), eta=None, source=Pi0Source.ORACLE)
    order = np.argsort(p, kind="stable")
    sorted_p = p[order]
    # number of p-values <= each sorted p-value (counts tied values in full)
    rejections = np.searchsorted(sorted_p, sorted_p, side="right")
    fdr = np.clip(p.size * pi0.value * sorted_p / rejections, 0, 1)
    return RejectionPath.create(
        thresholds=sorted_p, fdr=fdr, order=order, label=label, pi0_used=pi0
    )


def bh_path(pvalues: ArrayLike) -> RejectionPath:
    """The Benjamini-Hochberg rejection path, which uses pi0 = 1."""

    return pvalue_path(pvalues, Pi0Estimate.one(), label="bh")


def qvalue_path(pvalues: ArrayLike, eta: float = DEFAULT_ETA) -> RejectionPath:
    """
    The q-value rejection path: the Benjamini-Hochberg path multiplied by the
    quantile estimate of the null proportion.

    """

    return pvalue_path(pvalues, pi0_quantile_estimate(pvalues, eta), label="qvalue")


def bh_reject(pvalues: ArrayLike, alpha: float) -> int:
    """
    The number of rejections of the classical Benjamini-Hochberg step-up procedure.

    The largest k with p_(k) <= k alpha / m is returned, 0 if there is none.

    """

    if not 0 < alpha <= 1:
        raise DomainError("alpha", f"must lie in (0, 1], not {alpha}")
    p = np.sort(np.asarray(pvalues, dtype=float))
    m = p.size
    k = 0
    for i in range(m):
        if p[i] <= alpha * (i + 1) / m:
            k = i + 1
    return k
