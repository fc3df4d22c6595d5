"""
Distribution kernel for the Normal, chi-square(1) and Gamma families and finite
mixtures of them.

All evaluation functions accept scalars or numpy arrays and are pure. Sampling
always takes an explicit SeededRng; there is no module level random state.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, optimize, stats

from fdrpath.exceptions import DomainError
from fdrpath.util.types import EvalKind, Family

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]

# Largest seed accepted by SeededRng.
MAX_SEED = 2 ** 64 - 1

# Tolerance for the weights of a mixture to sum to 1.
WEIGHT_SUM_TOLERANCE = 1e-12

# Absolute tolerance used when inverting a mixture cdf.
QUANTILE_XTOL = 1e-10


class SeededRng:
    """
    A seeded, deterministic random number generator.

    The generator is a numpy Generator on top of the counter-based Philox bit
    generator, so that identical seeds yield bit-identical draws on every
    platform. Independent child streams are derived by stream index, which is the
    way parallel callers must obtain their own generator.

    Parameters
    ----------
    seed : int
        Seed, between 0 and 2**64 - 1.
    stream : tuple of int
        Stream path. The root generator has the empty path; the path of a child is
        the path of its parent followed by the child's index.

    """

    def __init__(self, seed: int, stream: Tuple[int, ...] = ()):
        if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
            raise DomainError("seed", f"must be an integer, not {seed!r}")
        if seed < 0 or seed > MAX_SEED:
            raise DomainError("seed", f"must be between 0 and 2**64 - 1, not {seed}")
        if any(index < 0 for index in stream):
            raise DomainError("stream", "stream indices must be non-negative")

        self._seed = int(seed)
        self._stream = tuple(int(index) for index in stream)
        sequence = np.random.SeedSequence(self._seed, spawn_key=self._stream)
        self._generator = np.random.Generator(np.random.Philox(sequence))

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def stream(self) -> Tuple[int, ...]:
        return self._stream

    @property
    def generator(self) -> np.random.Generator:
        """The underlying numpy generator."""

        return self._generator

    def child(self, index: int) -> SeededRng:
        """
        Derive an independent generator for a stream index.

        The child does not depend on how many numbers have been drawn from the
        parent.

        Parameters
        ----------
        index : int
            Stream index.

        Returns
        -------
        SeededRng
            Child generator.

        """

        return SeededRng(self._seed, self._stream + (index,))

    def signs(self, n: int) -> np.ndarray:
        """Draw n independent signs, each +1 or -1 with probability 1/2."""

        return np.where(self._generator.random(n) < 0.5, -1.0, 1.0)

    def __repr__(self) -> str:
        return f"SeededRng(seed={self._seed}, stream={self._stream})"


@dataclass(frozen=True)
class DistFamily:
    """
    A distribution from one of the supported families.

    Use the constructors normal, chi_square_1 and gamma rather than instantiating
    the class directly.

    Parameters
    ----------
    family : Family
        Family tag.
    mean : float
        Mean (normal family only).
    sd : float
        Standard deviation (normal family only).
    shape : float
        Shape k (gamma family only).
    scale : float
        Scale theta (gamma family only).

    """

    family: Family
    mean: float = 0.0
    sd: float = 1.0
    shape: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if self.family == Family.NORMAL:
            if not np.isfinite(self.mean):
                raise DomainError("mean", "the mean must be finite")
            if not (np.isfinite(self.sd) and self.sd > 0):
                raise DomainError("sd", "the standard deviation must be positive")
        elif self.family == Family.GAMMA:
            if not (np.isfinite(self.shape) and self.shape > 0):
                raise DomainError("shape", "the gamma shape must be positive")
            if not (np.isfinite(self.scale) and self.scale > 0):
                raise DomainError("scale", "the gamma scale must be positive")

    @staticmethod
    def normal(mean: float = 0.0, sd: float = 1.0) -> DistFamily:
        return DistFamily(Family.NORMAL, mean=float(mean), sd=float(sd))

    @staticmethod
    def chi_square_1() -> DistFamily:
        return DistFamily(Family.CHI_SQUARE_1)

    @staticmethod
    def gamma(shape: float, scale: float) -> DistFamily:
        return DistFamily(Family.GAMMA, shape=float(shape), scale=float(scale))

    @staticmethod
    def gamma_of_squared_normal(sd: float) -> DistFamily:
        """
        The distribution of z² for z ~ N(0, sd²), which is Gamma(1/2, 2 sd²).

        Parameters
        ----------
        sd : float
            Standard deviation of z.

        """

        if not sd > 0:
            raise DomainError("sd", "the standard deviation must be positive")
        return DistFamily.gamma(0.5, 2 * sd ** 2)

    def frozen(self):
        """The equivalent frozen scipy.stats distribution."""

        if self.family == Family.NORMAL:
            return stats.norm(loc=self.mean, scale=self.sd)
        if self.family == Family.CHI_SQUARE_1:
            return stats.chi2(df=1)
        return stats.gamma(a=self.shape, scale=self.scale)

    def is_non_negative(self) -> bool:
        """Whether the support is contained in [0, inf)."""

        return self.family != Family.NORMAL

    def pdf(self, x: ArrayLike) -> np.ndarray:
        return self.frozen().pdf(x)

    def logpdf(self, x: ArrayLike) -> np.ndarray:
        return self.frozen().logpdf(x)

    def cdf(self, x: ArrayLike) -> np.ndarray:
        return self.frozen().cdf(x)

    def sf(self, x: ArrayLike) -> np.ndarray:
        return self.frozen().sf(x)

    def quantile(self, p: ArrayLike) -> np.ndarray:
        _check_probabilities(p)
        return self.frozen().ppf(p)

    def sample(self, n: int, rng: SeededRng) -> np.ndarray:
        _check_count(n)
        generator = rng.generator
        if self.family == Family.NORMAL:
            return generator.normal(self.mean, self.sd, n)
        if self.family == Family.CHI_SQUARE_1:
            return generator.chisquare(1, n)
        # numpy's gamma sampler covers shapes below and above 1.
        return generator.gamma(self.shape, self.scale, n)

    def __str__(self) -> str:
        if self.family == Family.NORMAL:
            return f"normal({self.mean:g}, {self.sd:g})"
        if self.family == Family.CHI_SQUARE_1:
            return "chi-square-1"
        return f"gamma({self.shape:g}, {self.scale:g})"


@dataclass(frozen=True)
class MixtureDensity:
    """
    A finite mixture of distributions.

    Parameters
    ----------
    components : tuple of (weight, DistFamily)
        Mixture weights and components. The weights must be non-negative and sum
        to 1.

    """

    components: Tuple[Tuple[float, DistFamily], ...]

    def __post_init__(self):
        if len(self.components) == 0:
            raise DomainError("components", "a mixture needs at least one component")
        weights = np.array([w for w, _ in self.components], dtype=float)
        if np.any(~np.isfinite(weights)) or np.any(weights < 0):
            raise DomainError("weights", "mixture weights must be non-negative")
        if abs(weights.sum() - 1) > WEIGHT_SUM_TOLERANCE:
            raise DomainError(
                "weights", f"mixture weights must sum to 1, not {weights.sum():.15g}"
            )

    @staticmethod
    def of(weights: Iterable[float], components: Iterable[DistFamily]) -> MixtureDensity:
        return MixtureDensity(
            tuple((float(w), c) for w, c in zip(weights, components))
        )

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.components], dtype=float)

    def is_non_negative(self) -> bool:
        return all(c.is_non_negative() for _, c in self.components)

    def _weighted_sum(self, x: ArrayLike, method: str) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        total = np.zeros_like(x)
        for weight, component in self.components:
            if weight > 0:
                total = total + weight * getattr(component, method)(x)
        return total

    def pdf(self, x: ArrayLike) -> np.ndarray:
        return self._weighted_sum(x, "pdf")

    def cdf(self, x: ArrayLike) -> np.ndarray:
        return self._weighted_sum(x, "cdf")

    def sf(self, x: ArrayLike) -> np.ndarray:
        return self._weighted_sum(x, "sf")

    def quantile(self, p: ArrayLike) -> np.ndarray:
        _check_probabilities(p)
        p_array = np.atleast_1d(np.asarray(p, dtype=float))
        result = np.array([self._quantile(float(q)) for q in p_array.ravel()])
        result = result.reshape(p_array.shape)
        return result if np.ndim(p) else result[0]

    def _quantile(self, p: float) -> float:
        active = [c for w, c in self.components if w > 0]
        lo = min(float(c.quantile(p)) for c in active)
        hi = max(float(c.quantile(p)) for c in active)
        if lo == hi:
            return lo
        # the mixture quantile lies between the smallest and largest component
        # quantiles
        return optimize.brentq(
            lambda x: float(self.cdf(x)) - p, lo, hi, xtol=QUANTILE_XTOL, rtol=1e-15
        )

    def sample(self, n: int, rng: SeededRng) -> np.ndarray:
        _check_count(n)
        generator = rng.generator
        labels = generator.choice(len(self.components), size=n, p=self.weights)
        values = np.empty(n)
        for index, (_, component) in enumerate(self.components):
            chosen = labels == index
            count = int(chosen.sum())
            if count:
                values[chosen] = component.sample(count, rng)
        return values


Distribution = Union[DistFamily, MixtureDensity]


def dist_eval(d: Distribution, x: ArrayLike, kind: Union[EvalKind, str]) -> np.ndarray:
    """
    Evaluate the pdf, cdf, survival function or quantile function of a distribution.

    Parameters
    ----------
    d : DistFamily or MixtureDensity
        Distribution.
    x : float or array
        Evaluation point(s). For the quantile function these are probabilities in
        (0, 1).
    kind : EvalKind or str
        What to evaluate.

    Returns
    -------
    float or array
        The evaluated quantity.

    Raises
    ------
    DomainError
        If a probability passed to the quantile function lies outside (0, 1).

    """

    if isinstance(kind, str):
        kind = EvalKind.for_name(kind)
    if kind == EvalKind.PDF:
        return d.pdf(x)
    if kind == EvalKind.CDF:
        return d.cdf(x)
    if kind == EvalKind.SF:
        return d.sf(x)
    return d.quantile(x)


def dist_sample(d: Distribution, n: int, rng: SeededRng) -> np.ndarray:
    """
    Draw a sample from a distribution.

    Parameters
    ----------
    d : DistFamily or MixtureDensity
        Distribution.
    n : int
        Sample size, at least 1.
    rng : SeededRng
        Random number generator.

    Returns
    -------
    np.ndarray
        The sample.

    """

    return d.sample(n, rng)


def effective_support(d: Distribution, tail: float = 1e-13) -> Tuple[float, float]:
    """
    The interval outside of which a distribution has at most the given tail mass on
    each side.

    """

    return float(d.quantile(tail)), float(d.quantile(1 - tail))


def total_mass(d: Distribution, support: Optional[Tuple[float, float]] = None) -> float:
    """
    Integrate a density numerically over its effective support.

    Non-negative distributions are integrated on the log scale, which removes the
    singularity at 0 of chi-square(1) and of gamma densities with shape below 1.

    Parameters
    ----------
    d : DistFamily or MixtureDensity
        Distribution.
    support : tuple of float, optional
        Integration interval. The effective support is used by default.

    Returns
    -------
    float
        The integral of the density.

    """

    lo, hi = support if support is not None else effective_support(d)
    if d.is_non_negative() and lo > 0:
        value, _ = integrate.quad(
            lambda u: float(d.pdf(np.exp(u))) * np.exp(u),
            np.log(lo),
            np.log(hi),
            limit=500,
            epsabs=1e-12,
            epsrel=1e-12,
        )
        return value

    points = [p for p in (0.0,) if lo < p < hi]
    value, _ = integrate.quad(
        lambda x: float(d.pdf(x)),
        lo,
        hi,
        points=points or None,
        limit=500,
        epsabs=1e-12,
        epsrel=1e-12,
    )
    return value


def _check_probabilities(p: ArrayLike) -> None:
    p = np.asarray(p, dtype=float)
    if np.any(~(p > 0)) or np.any(~(p < 1)):
        raise DomainError("probability", "quantile probabilities must lie in (0, 1)")


def _check_count(n: int) -> None:
    if n < 1:
        raise DomainError("n", f"the sample size must be at least 1, not {n}")
