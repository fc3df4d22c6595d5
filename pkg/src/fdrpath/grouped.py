"""
Multiple testing for non-exchangeable tests which fall into groups with their own
null proportions and alternatives.

The optimal decision statistic is the weighted likelihood ratio (wlr)
((1 - pi0_k) / pi0_k) f_k1(z) / f_k0(z) of a test in group k. This module provides
the oracle versions of the frequentist and Bayesian rejection paths based on it,
as well as a weighted p-value baseline. All densities are on the z² scale.
"""
from __future__ import annotations

import abc
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize, special, stats

from fdrpath.exceptions import DomainError, UnsupportedMethodError
from fdrpath.rpath import RejectionPath, share_within_ties
from fdrpath.statdist import ArrayLike, DistFamily, SeededRng
from fdrpath.twogroups import (
    TestBattery,
    TwoGroupsSpec,
    oracle_bayes_factor,
    pvalue_of_zsq,
    simulate_battery,
)
from fdrpath.util.types import CdfMethod, Family

logger = logging.getLogger(__name__)

DEFAULT_N_MC = 10 ** 6


@dataclass(frozen=True)
class GroupSpec:
    """
    The two-groups models of all groups. Group labels are 0, 1, ..., k - 1.

    Parameters
    ----------
    pi0s : tuple of float
        Null proportion of each group.
    alts : tuple of DistFamily
        Alternative distribution of z² in each group.
    nulls : tuple of DistFamily, optional
        Null distribution of z² in each group. Chi-square(1) by default.

    """

    pi0s: Tuple[float, ...]
    alts: Tuple[DistFamily, ...]
    nulls: Optional[Tuple[DistFamily, ...]] = None

    def __post_init__(self):
        if len(self.pi0s) < 1:
            raise DomainError("pi0s", "at least one group is needed")
        if len(self.alts) != len(self.pi0s):
            raise DomainError("alts", "need one alternative per group")
        if self.nulls is None:
            object.__setattr__(
                self, "nulls", tuple(DistFamily.chi_square_1() for _ in self.pi0s)
            )
        elif len(self.nulls) != len(self.pi0s):
            raise DomainError("nulls", "need one null per group")
        for pi0 in self.pi0s:
            if not 0 <= pi0 <= 1:
                raise DomainError("pi0s", f"null proportions must lie in [0, 1], not {pi0}")

    @staticmethod
    def wakefield(pi0s: Sequence[float], ks: Sequence[float]) -> GroupSpec:
        """Groups with N(0, 1 + k) alternatives on the z scale."""

        if len(pi0s) != len(ks):
            raise DomainError("ks", "need one variance ratio per group")
        return GroupSpec(
            pi0s=tuple(float(pi0) for pi0 in pi0s),
            alts=tuple(DistFamily.gamma(0.5, 2 * (1 + k)) for k in ks),
        )

    @property
    def k(self) -> int:
        return len(self.pi0s)

    def two_groups(self, group: int, m: int = 1) -> TwoGroupsSpec:
        """The two-groups model of a group."""

        assert self.nulls is not None
        return TwoGroupsSpec(
            pi0=self.pi0s[group], alt=self.alts[group], m=m, null=self.nulls[group]
        )

    def log_prior_odds(self, group: int) -> float:
        """log((1 - pi0) / pi0) of a group; -inf for a group without alternatives."""

        pi0 = self.pi0s[group]
        if pi0 == 0:
            raise DomainError("pi0s", f"group {group} has no null tests")
        if pi0 == 1:
            return -np.inf
        return float(np.log1p(-pi0) - np.log(pi0))


class WlrStatistic:
    """
    Weighted likelihood ratios, one per test.

    The logarithms are kept, as the ratios themselves may overflow. Tests in
    groups without alternatives have a ratio of 0 (logarithm -inf).

    Parameters
    ----------
    log_value : array
        Natural logarithms of the ratios.
    group : array
        Group label of each test.

    """

    def __init__(self, log_value: ArrayLike, group: ArrayLike):
        log_value = np.array(log_value, dtype=float, ndmin=1)
        group = np.array(group, dtype=np.int64, ndmin=1)
        if len(log_value) != len(group):
            raise DomainError("group", "need one group label per statistic")
        if np.any(np.isnan(log_value)):
            raise DomainError("log_value", "statistics must not be NaN")
        log_value.setflags(write=False)
        group.setflags(write=False)
        self._log_value = log_value
        self._group = group

    @property
    def log_value(self) -> np.ndarray:
        return self._log_value

    @property
    def value(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self._log_value)

    @property
    def group(self) -> np.ndarray:
        return self._group

    def __len__(self) -> int:
        return len(self._log_value)


def _check_groups(group: Optional[np.ndarray], spec: GroupSpec) -> np.ndarray:
    if group is None:
        raise DomainError("group", "the battery has no group labels")
    if len(group) and np.max(group) >= spec.k:
        raise DomainError(
            "group", f"group label {int(np.max(group))} has no model (only {spec.k} groups)"
        )
    return group


def wlr(zsq: ArrayLike, group: ArrayLike, spec: GroupSpec) -> WlrStatistic:
    """
    The weighted likelihood ratios ((1 - pi0_k) / pi0_k) f_k1 / f_k0 of tests.

    Parameters
    ----------
    zsq : array
        Squared z statistics.
    group : array
        Group label of each test.
    spec : GroupSpec
        Group models.

    Returns
    -------
    WlrStatistic
        The statistics.

    Raises
    ------
    DomainError
        If a test belongs to a group with pi0 = 0 or to an unknown group.

    """

    zsq = np.array(zsq, dtype=float, ndmin=1)
    group = _check_groups(np.array(group, dtype=np.int64, ndmin=1), spec)
    if len(zsq) != len(group):
        raise DomainError("group", "need one group label per statistic")

    log_value = np.empty(len(zsq))
    for k in np.unique(group):
        members = group == k
        log_odds = spec.log_prior_odds(int(k))
        if log_odds == -np.inf:
            log_value[members] = -np.inf
            continue
        pi0 = spec.pi0s[k]
        log_bf = oracle_bayes_factor(zsq[members], spec.two_groups(int(k))).log_value
        # same arithmetic as the oracle local fdr, so that both agree exactly
        log_value[members] = log_bf + np.log1p(-pi0) - np.log(pi0)
    return WlrStatistic(log_value, group)


class GroupWlrCdf(abc.ABC):
    """The distribution of the wlr statistic of a group under the null."""

    @abc.abstractmethod
    def sf_log(self, log_t: ArrayLike) -> np.ndarray:
        """The probability that the logarithm of the statistic exceeds log_t."""

        raise NotImplementedError

    def cdf(self, t: ArrayLike) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            log_t = np.log(np.maximum(t, 0))
        return np.where(t < 0, 0.0, 1 - self.sf_log(log_t))


class _ZeroWlrCdf(GroupWlrCdf):
    # groups without alternatives: the statistic is 0
    def sf_log(self, log_t: ArrayLike) -> np.ndarray:
        return np.zeros_like(np.asarray(log_t, dtype=float))


class _AnalyticWlrCdf(GroupWlrCdf):
    """
    Null distribution of the wlr of a chi-square(1) null and a Gamma(shape, scale)
    alternative, for which the likelihood ratio is increasing in z².

    """

    def __init__(self, log_odds: float, alt: DistFamily):
        self._log_odds = log_odds
        self._shape = alt.shape
        self._scale = alt.scale
        # log likelihood ratio = (shape - 1/2) log x + slope x + offset
        self._slope = 0.5 - 1 / alt.scale
        self._offset = (
            special.gammaln(0.5)
            + 0.5 * np.log(2)
            - special.gammaln(alt.shape)
            - alt.shape * np.log(alt.scale)
        )

    def _inverse(self, log_lr: float) -> float:
        if not np.isfinite(log_lr):
            return 0.0 if log_lr < 0 else np.inf
        if self._shape == 0.5:
            return max(0.0, (log_lr - self._offset) / self._slope)

        # solve in y = log x; the left-hand side is increasing in y
        def f(y: float) -> float:
            return (self._shape - 0.5) * y + self._slope * np.exp(y) + self._offset - log_lr

        lo, hi = -1.0, 1.0
        while f(lo) > 0:
            lo *= 2
        while f(hi) < 0:
            hi *= 2
        return float(np.exp(optimize.brentq(f, lo, hi, xtol=1e-12)))

    def sf_log(self, log_t: ArrayLike) -> np.ndarray:
        log_lr = np.atleast_1d(np.asarray(log_t, dtype=float)) - self._log_odds
        if self._shape == 0.5:
            with np.errstate(invalid="ignore"):
                x = np.maximum(0.0, (log_lr - self._offset) / self._slope)
        else:
            x = np.array([self._inverse(value) for value in log_lr])
        return stats.chi2.sf(x, df=1).reshape(np.shape(log_t))


class _MonteCarloWlrCdf(GroupWlrCdf):
    """Empirical null distribution of the wlr from simulated null statistics."""

    def __init__(self, sorted_log_wlr: np.ndarray):
        self._sorted = sorted_log_wlr

    @property
    def n(self) -> int:
        return len(self._sorted)

    def sf_log(self, log_t: ArrayLike) -> np.ndarray:
        below = np.searchsorted(self._sorted, np.asarray(log_t, dtype=float), side="right")
        return 1 - below / self.n


@dataclass(frozen=True)
class NullWlrCdf:
    """
    The null distribution of the wlr statistic of every group.

    Parameters
    ----------
    cdfs : tuple of GroupWlrCdf
        One distribution per group.
    method : CdfMethod
        How the distributions were obtained.

    """

    cdfs: Tuple[GroupWlrCdf, ...]
    method: CdfMethod

    @property
    def k(self) -> int:
        return len(self.cdfs)

    def cdf(self, group: int, t: ArrayLike) -> np.ndarray:
        return self.cdfs[group].cdf(t)


def _is_monotone_gamma(spec: GroupSpec, group: int) -> bool:
    assert spec.nulls is not None
    null = spec.nulls[group]
    alt = spec.alts[group]
    if null.family != Family.CHI_SQUARE_1 or alt.family != Family.GAMMA:
        return False
    if alt.shape == 0.5 and alt.scale == 2:
        return False
    return alt.shape >= 0.5 and alt.scale >= 2


def null_wlr_cdf(
    spec: GroupSpec,
    method: Union[CdfMethod, str] = CdfMethod.ANALYTIC,
    n_mc: int = DEFAULT_N_MC,
    rng: Optional[SeededRng] = None,
) -> NullWlrCdf:
    """
    The null distribution of the wlr statistic in each group.

    The analytic method composes the chi-square(1) distribution with the inverse of
    the likelihood ratio, which requires a chi-square(1) null and a gamma
    alternative with a likelihood ratio increasing in z² (shape >= 1/2 and scale
    >= 2). The Monte Carlo method uses the empirical distribution of n_mc null
    draws per group, each group with its own stream of the random number generator.

    Parameters
    ----------
    spec : GroupSpec
        Group models.
    method : CdfMethod or str
        Analytic or Monte Carlo.
    n_mc : int
        Number of Monte Carlo draws per group.
    rng : SeededRng, optional
        Random number generator for the Monte Carlo method (seed 0 by default).

    Returns
    -------
    NullWlrCdf
        The distributions.

    Raises
    ------
    UnsupportedMethodError
        If the analytic method is requested for a group whose likelihood ratio is
        not monotone.

    """

    if isinstance(method, str):
        method = CdfMethod.for_name(method)
    if method == CdfMethod.MONTE_CARLO and n_mc < 1:
        raise DomainError("n_mc", f"must be at least 1, not {n_mc}")
    rng = rng or SeededRng(0)

    cdfs = []
    for k in range(spec.k):
        log_odds = spec.log_prior_odds(k)
        if log_odds == -np.inf:
            cdfs.append(_ZeroWlrCdf())
        elif method == CdfMethod.ANALYTIC:
            if not _is_monotone_gamma(spec, k):
                raise UnsupportedMethodError(
                    f"The likelihood ratio of group {k} is not monotone in z², so no "
                    f"analytic wlr distribution is available."
                )
            cdfs.append(_AnalyticWlrCdf(log_odds, spec.alts[k]))
        else:
            assert spec.nulls is not None
            null_zsq = spec.nulls[k].sample(n_mc, rng.child(k))
            log_wlr = wlr(null_zsq, np.full(n_mc, k), spec).log_value
            cdfs.append(_MonteCarloWlrCdf(np.sort(log_wlr)))
            logger.debug("Simulated %d null wlr statistics for group %d", n_mc, k)
    return NullWlrCdf(cdfs=tuple(cdfs), method=method)


def _descending_order(statistic: WlrStatistic) -> np.ndarray:
    return np.argsort(-statistic.log_value, kind="stable")


def grouped_fdr_path(
    battery: TestBattery, spec: GroupSpec, cdfs: NullWlrCdf, label: str = "grouped-wlr"
) -> RejectionPath:
    """
    The frequentist rejection path of the wlr statistic.

    The wlr statistics of all tests are ranked in descending order. Rejecting all
    tests with a statistic of at least t has the estimated FDR

        sum_i pi0_{d_i} (1 - F_{d_i}(t)) / max(1, #{wlr_i >= t}),

    where d_i is the group of test i and F_k the null distribution of the statistic
    in group k. The estimates are clamped to [0, 1].

    Raises
    ------
    DomainError
        If a test has no group or its group has no model.

    """

    group = _check_groups(battery.group, spec)
    if cdfs.k != spec.k:
        raise DomainError("cdfs", "need one null distribution per group")
    statistic = wlr(battery.zsq, group, spec)
    order = _descending_order(statistic)
    log_t = statistic.log_value[order]

    # number of statistics >= each threshold, ties counted in full
    ascending = np.sort(statistic.log_value)
    rejections = battery.m - np.searchsorted(ascending, log_t, side="left")

    expected_false = np.zeros(battery.m)
    for k in range(spec.k):
        n_k = int(np.count_nonzero(group == k))
        if n_k:
            expected_false += n_k * spec.pi0s[k] * cdfs.cdfs[k].sf_log(log_t)
    fdr = np.clip(expected_false / np.maximum(1, rejections), 0, 1)
    return RejectionPath.create(
        thresholds=statistic.value[order], fdr=fdr, order=order, label=label
    )


def group_local_fdr(battery: TestBattery, spec: GroupSpec) -> np.ndarray:
    """
    The oracle posterior null probabilities
    pi0_k f_k0 / (pi0_k f_k0 + (1 - pi0_k) f_k1) = 1 / (1 + wlr).

    """

    group = _check_groups(battery.group, spec)
    return special.expit(-wlr(battery.zsq, group, spec).log_value)


def grouped_bayes_path(
    battery: TestBattery, spec: GroupSpec, label: str = "grouped-bayes"
) -> RejectionPath:
    """
    The oracle Bayesian rejection path of grouped tests.

    Tests are ranked by descending wlr, which is the order of increasing local fdr,
    and the Bayesian FDR of rejecting the first i tests is the mean of their local
    fdrs. Tied tests share the value of rejecting all of them.

    """

    group = _check_groups(battery.group, spec)
    statistic = wlr(battery.zsq, group, spec)
    order = _descending_order(statistic)
    u = special.expit(-statistic.log_value)[order]
    bfdr = share_within_ties(u, np.cumsum(u) / np.arange(1, battery.m + 1))
    return RejectionPath.create(
        thresholds=u, fdr=np.clip(bfdr, 0, 1), order=order, label=label
    )


def weighted_p_path(
    battery: TestBattery,
    weights: Sequence[float],
    spec: GroupSpec,
    label: str = "weighted-p",
) -> RejectionPath:
    """
    The rejection path of weighted p-values p_i / w_{d_i}.

    Tests are ranked by increasing weighted p-value. Rejecting all tests with a
    weighted p-value of at most t amounts to the p-value threshold w_k t in group
    k, so that the estimated FDR is

        sum_k n_k pi0_k min(1, w_k t) / max(1, #{p_i / w_{d_i} <= t}),

    clamped to [0, 1]. Each group contributes its own null proportion at its own
    threshold. This is not the single-pi0 estimate pi0 m t / R with pi0 replaced by
    the average null proportion of the rejected tests: that average depends on which
    tests happen to be rejected, while the expected number of false rejections
    depends only on the group sizes. With equal weights the estimate is the
    single-pi0 estimate with the average null proportion of all tests.

    This path is a baseline for reporting only; no weights are optimized.

    Parameters
    ----------
    battery : TestBattery
        Tests with group labels.
    weights : sequence of float
        Positive weight of each group.
    spec : GroupSpec
        Group models (only the null proportions are used).
    label : str
        Procedure name.

    """

    group = _check_groups(battery.group, spec)
    weights = np.asarray(weights, dtype=float)
    if len(weights) != spec.k:
        raise DomainError("weights", "need one weight per group")
    if np.any(~(weights > 0)) or np.any(~np.isfinite(weights)):
        raise DomainError("weights", "weights must be positive")

    weighted = battery.pvalue / weights[group]
    order = np.argsort(weighted, kind="stable")
    sorted_weighted = weighted[order]
    rejections = np.searchsorted(sorted_weighted, sorted_weighted, side="right")

    expected_false = np.zeros(battery.m)
    for k in range(spec.k):
        n_k = int(np.count_nonzero(group == k))
        if n_k:
            expected_false += (
                n_k * spec.pi0s[k] * np.minimum(1.0, weights[k] * sorted_weighted)
            )
    fdr = np.clip(expected_false / rejections, 0, 1)
    return RejectionPath.create(
        thresholds=sorted_weighted, fdr=fdr, order=order, label=label
    )


def simulate_grouped_battery(
    spec: GroupSpec,
    rng: SeededRng,
    group_sizes: Optional[Sequence[int]] = None,
    group_probs: Optional[Sequence[float]] = None,
    m: Optional[int] = None,
) -> TestBattery:
    """
    Simulate a battery of grouped tests.

    Either the group sizes are given, in which case the labels are assigned in
    blocks, or the number of tests and the group probabilities, in which case each
    test is assigned to a group at random. Each group is then simulated from its
    two-groups model with its own stream of the random number generator.

    Parameters
    ----------
    spec : GroupSpec
        Group models.
    rng : SeededRng
        Random number generator.
    group_sizes : sequence of int, optional
        Number of tests in each group.
    group_probs : sequence of float, optional
        Probability of each group.
    m : int, optional
        Number of tests (with group_probs).

    Returns
    -------
    TestBattery
        The battery, with group labels and latent indicators.

    """

    if group_sizes is not None:
        if group_probs is not None or m is not None:
            raise DomainError("group_sizes", "give either group sizes or probabilities")
        if len(group_sizes) != spec.k or any(size < 0 for size in group_sizes):
            raise DomainError("group_sizes", "need a non-negative size per group")
        group = np.repeat(np.arange(spec.k), group_sizes)
    else:
        if group_probs is None or m is None:
            raise DomainError("group_probs", "group probabilities need a number of tests")
        probs = np.asarray(group_probs, dtype=float)
        if len(probs) != spec.k or np.any(probs < 0) or abs(probs.sum() - 1) > 1e-12:
            raise DomainError("group_probs", "need probabilities summing to 1 per group")
        group = rng.child(0).generator.choice(spec.k, size=m, p=probs)
    if len(group) < 1:
        raise DomainError("group_sizes", "the battery needs at least one test")

    z = np.empty(len(group))
    zsq = np.empty(len(group))
    gamma_truth = np.empty(len(group), dtype=np.int8)
    for k in range(spec.k):
        members = group == k
        n_k = int(np.count_nonzero(members))
        if n_k == 0:
            continue
        part = simulate_battery(spec.two_groups(k, n_k), rng.child(k + 1))
        z[members] = part.z
        zsq[members] = part.zsq
        assert part.gamma_truth is not None
        gamma_truth[members] = part.gamma_truth
    return TestBattery(
        z=z, zsq=zsq, pvalue=pvalue_of_zsq(zsq), gamma_truth=gamma_truth, group=group
    )
