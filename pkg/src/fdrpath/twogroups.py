"""
The generative two-groups model.

Statistics are simulated on the z² scale and given a random sign afterwards, so
that alternatives can be specified by any non-negative distribution (notably the
gamma family) and the two-sided p-values of the signed statistics coincide with the
chi-square(1) survival function of the squared ones.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import special, stats

from fdrpath.exceptions import DomainError, UnsupportedMethodError
from fdrpath.statdist import ArrayLike, DistFamily, SeededRng
from fdrpath.util.types import EffectKind, Family

logger = logging.getLogger(__name__)

# Tolerance for the consistency checks between z, z² and p-values.
CONSISTENCY_TOLERANCE = 1e-12

# Log Bayes factors are capped here so that Bayes factors stay finite.
MAX_LOG_BAYES_FACTOR = 700.0


@dataclass(frozen=True)
class EffectAlternative:
    """
    An alternative on the z scale, z = effect + e with e ~ N(0, 1).

    Parameters
    ----------
    kind : EffectKind
        Effect distribution: a normal distribution with standard deviation scale, a
        Laplace (double exponential) distribution with scale parameter scale, or a
        Student t distribution with df degrees of freedom multiplied by scale.
    scale : float
        Scale of the effect distribution.
    df : float
        Degrees of freedom (Student t only).

    """

    kind: EffectKind
    scale: float
    df: float = 10.0

    def __post_init__(self):
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise DomainError("scale", "the effect scale must be positive")
        if self.kind == EffectKind.STUDENT_T and not self.df > 0:
            raise DomainError("df", "the degrees of freedom must be positive")

    def sample_z(self, n: int, rng: SeededRng) -> np.ndarray:
        generator = rng.generator
        if self.kind == EffectKind.NORMAL:
            effects = generator.normal(0.0, self.scale, n)
        elif self.kind == EffectKind.LAPLACE:
            effects = generator.laplace(0.0, self.scale, n)
        else:
            effects = self.scale * generator.standard_t(self.df, n)
        return effects + generator.normal(0.0, 1.0, n)

    def sample(self, n: int, rng: SeededRng) -> np.ndarray:
        """Sample z² values."""

        return self.sample_z(n, rng) ** 2

    def __str__(self) -> str:
        if self.kind == EffectKind.STUDENT_T:
            return f"effect {self.kind.value}({self.df:g}) x {self.scale:g}"
        return f"effect {self.kind.value}({self.scale:g})"


Alternative = Union[DistFamily, EffectAlternative]


@dataclass(frozen=True)
class TwoGroupsSpec:
    """
    The generative truth of a two-groups model.

    The null and alternative distributions are distributions of z².

    Parameters
    ----------
    pi0 : float
        Proportion of null tests.
    null : DistFamily
        Null distribution of z².
    alt : DistFamily or EffectAlternative
        Alternative distribution of z².
    m : int
        Number of tests.

    """

    pi0: float
    alt: Alternative
    m: int
    null: DistFamily = DistFamily.chi_square_1()

    def __post_init__(self):
        if not 0 <= self.pi0 <= 1:
            raise DomainError("pi0", f"must lie in [0, 1], not {self.pi0}")
        if self.m < 1:
            raise DomainError("m", f"the number of tests must be at least 1, not {self.m}")
        if not self.null.is_non_negative():
            raise DomainError("null", "the null must be a distribution of z²")
        if isinstance(self.alt, DistFamily) and not self.alt.is_non_negative():
            raise DomainError("alt", "the alternative must be a distribution of z²")

    @staticmethod
    def wakefield(pi0: float, k: float, m: int) -> TwoGroupsSpec:
        """
        The model pi0 N(0, 1) + (1 - pi0) N(0, 1 + k), expressed on the z² scale.

        Parameters
        ----------
        pi0 : float
            Proportion of null tests.
        k : float
            Ratio of the effect variance to the noise variance.
        m : int
            Number of tests.

        """

        if not k > 0:
            raise DomainError("k", "the variance ratio must be positive")
        return TwoGroupsSpec(
            pi0=pi0, alt=DistFamily.gamma(0.5, 2 * (1 + k)), m=m
        )


class TestBattery:
    """
    The observed statistics of a battery of tests.

    The arrays are read-only. The latent truth, if known, is kept for evaluating
    realized error rates only; no inference procedure reads it.

    Parameters
    ----------
    z : array
        z statistics.
    zsq : array
        Squared z statistics.
    pvalue : array
        Two-sided p-values.
    gamma_truth : array, optional
        Latent indicators (1 for an alternative, 0 for a null).
    group : array, optional
        Group labels (non-negative integers).

    Raises
    ------
    DomainError
        If the arrays have different lengths or are inconsistent with each other.

    """

    __test__ = False

    def __init__(
        self,
        z: ArrayLike,
        zsq: ArrayLike,
        pvalue: ArrayLike,
        gamma_truth: Optional[ArrayLike] = None,
        group: Optional[ArrayLike] = None,
    ):
        z = np.array(z, dtype=float)
        zsq = np.array(zsq, dtype=float)
        pvalue = np.array(pvalue, dtype=float)
        m = len(z)
        if m < 1:
            raise DomainError("z", "a battery needs at least one test")
        if len(zsq) != m or len(pvalue) != m:
            raise DomainError("zsq", "z, zsq and pvalue must have the same length")
        if np.any(~np.isfinite(z)):
            raise DomainError("z", "z statistics must be finite")
        if np.any(zsq < 0):
            raise DomainError("zsq", "squared statistics must be non-negative")
        if not np.allclose(
            zsq, z ** 2, rtol=CONSISTENCY_TOLERANCE, atol=CONSISTENCY_TOLERANCE
        ):
            raise DomainError("zsq", "zsq must equal the square of z")
        if np.any(~(pvalue > 0)) or np.any(~(pvalue <= 1)):
            raise DomainError("pvalue", "p-values must lie in (0, 1]")

        if gamma_truth is not None:
            gamma_truth = np.array(gamma_truth, dtype=np.int8)
            if len(gamma_truth) != m:
                raise DomainError("gamma_truth", "must have one entry per test")
            if np.any((gamma_truth != 0) & (gamma_truth != 1)):
                raise DomainError("gamma_truth", "indicators must be 0 or 1")
            gamma_truth.setflags(write=False)
        if group is not None:
            group = np.array(group, dtype=np.int64)
            if len(group) != m:
                raise DomainError("group", "must have one entry per test")
            if np.any(group < 0):
                raise DomainError("group", "group labels must be non-negative")
            group.setflags(write=False)

        for array in (z, zsq, pvalue):
            array.setflags(write=False)
        self._z = z
        self._zsq = zsq
        self._pvalue = pvalue
        self._gamma_truth = gamma_truth
        self._group = group

    @staticmethod
    def from_zsq(
        zsq: ArrayLike,
        signs: ArrayLike,
        gamma_truth: Optional[ArrayLike] = None,
        group: Optional[ArrayLike] = None,
    ) -> TestBattery:
        """Create a battery from squared statistics and signs."""

        zsq = np.asarray(zsq, dtype=float)
        return TestBattery(
            z=np.asarray(signs, dtype=float) * np.sqrt(zsq),
            zsq=zsq,
            pvalue=pvalue_of_zsq(zsq),
            gamma_truth=gamma_truth,
            group=group,
        )

    @staticmethod
    def from_z(
        z: ArrayLike,
        gamma_truth: Optional[ArrayLike] = None,
        group: Optional[ArrayLike] = None,
    ) -> TestBattery:
        """Create a battery from z statistics."""

        z = np.asarray(z, dtype=float)
        zsq = z ** 2
        return TestBattery(
            z=z, zsq=zsq, pvalue=pvalue_of_zsq(zsq), gamma_truth=gamma_truth, group=group
        )

    @property
    def m(self) -> int:
        return len(self._z)

    @property
    def z(self) -> np.ndarray:
        return self._z

    @property
    def zsq(self) -> np.ndarray:
        return self._zsq

    @property
    def pvalue(self) -> np.ndarray:
        return self._pvalue

    @property
    def gamma_truth(self) -> Optional[np.ndarray]:
        return self._gamma_truth

    @property
    def group(self) -> Optional[np.ndarray]:
        return self._group

    def has_truth(self) -> bool:
        return self._gamma_truth is not None

    def with_group(self, group: ArrayLike) -> TestBattery:
        """A copy of the battery with the given group labels."""

        return TestBattery(self._z, self._zsq, self._pvalue, self._gamma_truth, group)

    def __len__(self) -> int:
        return self.m


class BayesFactor:
    """
    Bayes factors f1/f0, one per test.

    The logarithms are kept alongside the values, so that posterior probabilities
    can be computed without overflow.

    Parameters
    ----------
    log_value : array
        Natural logarithms of the Bayes factors.

    """

    def __init__(self, log_value: ArrayLike):
        log_value = np.array(log_value, dtype=float, ndmin=1)
        if np.any(np.isnan(log_value)) or np.any(log_value == np.inf):
            raise DomainError("log_value", "Bayes factors must be finite")
        log_value = np.minimum(log_value, MAX_LOG_BAYES_FACTOR)
        log_value.setflags(write=False)
        self._log_value = log_value

    @property
    def log_value(self) -> np.ndarray:
        return self._log_value

    @property
    def value(self) -> np.ndarray:
        return np.exp(self._log_value)

    def __len__(self) -> int:
        return len(self._log_value)


def pvalue_of_zsq(zsq: ArrayLike) -> np.ndarray:
    """
    Two-sided p-values for squared z statistics.

    The p-values are floored at the smallest positive float, so that they stay in
    (0, 1] for extreme statistics.

    """

    p = stats.chi2.sf(np.asarray(zsq, dtype=float), df=1)
    return np.maximum(p, np.finfo(float).tiny)


def sign_randomize(zsq: ArrayLike, rng: SeededRng) -> np.ndarray:
    """
    Attach independent random signs to the square roots of squared statistics.

    Parameters
    ----------
    zsq : array
        Squared statistics, all non-negative.
    rng : SeededRng
        Random number generator.

    Returns
    -------
    np.ndarray
        z statistics with |z| = sqrt(zsq).

    Raises
    ------
    DomainError
        If a squared statistic is negative.

    """

    zsq = np.asarray(zsq, dtype=float)
    if np.any(zsq < 0) or np.any(np.isnan(zsq)):
        raise DomainError("zsq", "squared statistics must be non-negative")
    return rng.signs(len(zsq)) * np.sqrt(zsq)


def simulate_battery(spec: TwoGroupsSpec, rng: SeededRng) -> TestBattery:
    """
    Simulate a test battery from a two-groups model.

    The latent indicators are Bernoulli(1 - pi0) draws; z² values come from the null
    or the alternative accordingly and are given random signs.

    Parameters
    ----------
    spec : TwoGroupsSpec
        Generative model.
    rng : SeededRng
        Random number generator.

    Returns
    -------
    TestBattery
        The simulated battery, with the latent indicators recorded.

    """

    gamma_truth = (rng.child(0).generator.random(spec.m) < 1 - spec.pi0).astype(np.int8)
    n_alt = int(gamma_truth.sum())
    n_null = spec.m - n_alt

    zsq = np.empty(spec.m)
    if n_null:
        zsq[gamma_truth == 0] = spec.null.sample(n_null, rng.child(1))
    if n_alt:
        zsq[gamma_truth == 1] = spec.alt.sample(n_alt, rng.child(2))

    z = sign_randomize(zsq, rng.child(3))
    logger.debug("Simulated %d tests (%d alternatives)", spec.m, n_alt)

    return TestBattery(z=z, zsq=zsq, pvalue=pvalue_of_zsq(zsq), gamma_truth=gamma_truth)


def wakefield_bf(z: ArrayLike, k: float) -> BayesFactor:
    """
    The Bayes factor of N(0, 1 + k) against N(0, 1) at z.

    The value is (1 + k)^(-1/2) exp(k z² / (2 (1 + k))), a monotone transformation
    of z². For k = 0 it is exactly 1.

    Parameters
    ----------
    z : float or array
        z statistic(s).
    k : float
        Ratio of the effect variance to the noise variance, non-negative.

    Returns
    -------
    BayesFactor
        The Bayes factors.

    Raises
    ------
    DomainError
        If k is negative.

    """

    if not k >= 0:
        raise DomainError("k", f"must be non-negative, not {k}")
    zsq = np.asarray(z, dtype=float) ** 2
    return BayesFactor(-0.5 * np.log1p(k) + 0.5 * k / (1 + k) * zsq)


def oracle_bayes_factor(zsq: ArrayLike, spec: TwoGroupsSpec) -> BayesFactor:
    """
    The Bayes factors f1(z²)/f0(z²) for known null and alternative distributions.

    The ratio of the z² densities equals the ratio of the densities of |z|.

    Raises
    ------
    UnsupportedMethodError
        If the alternative has no closed-form density on the z² scale.

    """

    if not isinstance(spec.alt, DistFamily):
        raise UnsupportedMethodError(
            f"No oracle Bayes factor is available for the alternative {spec.alt}."
        )
    # z² = 0 would give infinite densities; statistics are at least the smallest
    # positive float
    x = np.maximum(np.asarray(zsq, dtype=float), np.finfo(float).tiny)
    if spec.alt.family == Family.GAMMA and spec.null.family == Family.CHI_SQUARE_1:
        k = spec.alt.shape
        theta = spec.alt.scale
        # log Gamma(k, theta) density minus log chi-square(1) density
        log_bf = (
            (k - 0.5) * np.log(x)
            + x * (0.5 - 1 / theta)
            - special.gammaln(k)
            - k * np.log(theta)
            + special.gammaln(0.5)
            + 0.5 * np.log(2)
        )
    else:
        log_bf = spec.alt.logpdf(x) - spec.null.logpdf(x)
    return BayesFactor(log_bf)


def oracle_local_fdr(
    bf: Union[BayesFactor, ArrayLike], pi0: float
) -> np.ndarray:
    """
    The posterior null probability pi0 / (pi0 + (1 - pi0) BF).

    Parameters
    ----------
    bf : BayesFactor or array
        Bayes factors.
    pi0 : float
        Prior null probability.

    Returns
    -------
    np.ndarray
        Local fdrs, in [0, 1].

    """

    if not 0 <= pi0 <= 1:
        raise DomainError("pi0", f"must lie in [0, 1], not {pi0}")
    if isinstance(bf, BayesFactor):
        log_bf = bf.log_value
    else:
        values = np.asarray(bf, dtype=float)
        if np.any(values < 0):
            raise DomainError("bf", "Bayes factors must be non-negative")
        with np.errstate(divide="ignore"):
            log_bf = np.log(values)
    if pi0 == 1:
        return np.ones_like(log_bf, dtype=float)
    if pi0 == 0:
        return np.zeros_like(log_bf, dtype=float)
    # pi0 / (pi0 + (1 - pi0) BF) = 1 / (1 + exp(log BF + log prior odds))
    return special.expit(-(log_bf + np.log1p(-pi0) - np.log(pi0)))


def oracle_local_fdr_battery(
    battery: TestBattery, spec: TwoGroupsSpec
) -> np.ndarray:
    """The oracle local fdrs of all tests of a battery."""

    return oracle_local_fdr(oracle_bayes_factor(battery.zsq, spec), spec.pi0)

