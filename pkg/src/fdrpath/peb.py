"""
Parametric empirical Bayes inference for the two-groups model.

The alternative is modelled as a mixture of centered normals on the z scale,
f1 = sum_k w_k N(0, 1 + sigma_k²), over a fixed grid of effect standard deviations
sigma_k, and the null proportion and mixture weights are fitted by maximum
likelihood with the EM algorithm.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
from scipy import special, stats

from fdrpath.exceptions import DomainError, NumericError
from fdrpath.freq import Pi0Estimate, pvalue_path
from fdrpath.rpath import RejectionPath, share_within_ties
from fdrpath.statdist import ArrayLike, DistFamily, MixtureDensity, SeededRng
from fdrpath.twogroups import pvalue_of_zsq
from fdrpath.util.types import Pi0Source
from fdrpath.util.warnings import record_warning

logger = logging.getLogger(__name__)

# Ratio between consecutive grid points.
GRID_RATIO = np.sqrt(2)

# Smallest allowed grid point. Components N(0, 1 + sigma²) with sigma < 1 are
# hardly distinguishable from the null N(0, 1) and absorb null mass.
SIGMA_FLOOR = 1.0

# Default EM settings.
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 5000

# Allowed decrease of the log-likelihood in an EM step (rounding).
ASCENT_TOLERANCE = 1e-10


class SigmaGrid:
    """
    A strictly increasing grid of effect standard deviations.

    Parameters
    ----------
    sigmas : array
        Grid points, finite, positive and strictly increasing.

    """

    def __init__(self, sigmas: ArrayLike):
        sigmas = np.array(sigmas, dtype=float, ndmin=1)
        if len(sigmas) < 1:
            raise DomainError("sigmas", "the grid must not be empty")
        if np.any(~np.isfinite(sigmas)) or np.any(sigmas <= 0):
            raise DomainError("sigmas", "grid points must be finite and positive")
        if np.any(np.diff(sigmas) <= 0):
            raise DomainError("sigmas", "grid points must be strictly increasing")
        sigmas.setflags(write=False)
        self._sigmas = sigmas

    @property
    def sigmas(self) -> np.ndarray:
        return self._sigmas

    @property
    def k(self) -> int:
        return len(self._sigmas)

    def marginal_sds(self) -> np.ndarray:
        """Standard deviations sqrt(1 + sigma_k²) of the alternative components of z."""

        return np.sqrt(1 + self._sigmas ** 2)

    def __len__(self) -> int:
        return self.k

    def __repr__(self) -> str:
        return f"SigmaGrid({self._sigmas.tolist()})"


@dataclass(frozen=True)
class EmInit:
    """
    Starting values of the EM algorithm.

    Parameters
    ----------
    pi0 : float
        Initial null proportion, in (0, 1).
    weights : array, optional
        Initial alternative weights. Uniform weights are used by default.

    """

    pi0: float = 0.5
    weights: Optional[Sequence[float]] = None

    def __post_init__(self):
        if not 0 < self.pi0 < 1:
            raise DomainError("pi0", f"the initial pi0 must lie in (0, 1), not {self.pi0}")

    @staticmethod
    def random(k: int, rng: SeededRng) -> EmInit:
        """Random starting values: pi0 uniform on (0.1, 0.9), Dirichlet weights."""

        generator = rng.generator
        return EmInit(
            pi0=float(generator.uniform(0.1, 0.9)),
            weights=generator.dirichlet(np.ones(k)).tolist(),
        )

    def full_weights(self, k: int) -> np.ndarray:
        if self.weights is None:
            omega = np.full(k, 1.0 / k)
        else:
            omega = np.asarray(self.weights, dtype=float)
            if len(omega) != k or np.any(omega <= 0):
                raise DomainError(
                    "weights", f"need {k} positive initial weights, not {len(omega)}"
                )
            omega = omega / omega.sum()
        return np.concatenate(([self.pi0], (1 - self.pi0) * omega))


@dataclass(frozen=True, eq=False)
class MixtureFit:
    """
    The fitted two-groups model.

    Parameters
    ----------
    pi0_hat : float
        Fitted null proportion.
    weights : array
        Fitted alternative weights, one per grid point, summing to 1.
    grid : SigmaGrid
        Grid of effect standard deviations.
    loglik_trace : array
        Objective (log-likelihood, plus the log prior of the null penalty if there is
        one) after each iteration, starting with the value at the initial point.
    iterations : int
        Number of EM iterations performed.
    converged : bool
        Whether the relative increase of the objective fell below the tolerance.

    """

    pi0_hat: float
    weights: np.ndarray
    grid: SigmaGrid
    loglik_trace: np.ndarray
    iterations: int
    converged: bool

    def __post_init__(self):
        if not 0 <= self.pi0_hat <= 1:
            raise DomainError("pi0_hat", f"must lie in [0, 1], not {self.pi0_hat}")
        if len(self.weights) != self.grid.k:
            raise DomainError("weights", "need one weight per grid point")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1) > 1e-10:
            raise DomainError("weights", "weights must be non-negative and sum to 1")

    @property
    def loglik(self) -> float:
        return float(self.loglik_trace[-1])

    def full_weights(self) -> np.ndarray:
        """The weights of all components, the null first."""

        return np.concatenate(([self.pi0_hat], (1 - self.pi0_hat) * self.weights))

    def pi0_estimate(self) -> Pi0Estimate:
        # EM never moves a weight from a positive value to exactly 0
        return Pi0Estimate(
            value=max(self.pi0_hat, np.finfo(float).tiny), eta=None, source=Pi0Source.EM_FIT
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "pi0_hat": self.pi0_hat,
            "sigmas": self.grid.sigmas.tolist(),
            "weights": self.weights.tolist(),
            "loglik": self.loglik,
            "iterations": self.iterations,
            "converged": self.converged,
        }


@dataclass(frozen=True, eq=False)
class LocalFdrVector:
    """
    Local fdrs (posterior null probabilities), one per test.

    Parameters
    ----------
    values : array
        The local fdrs, in [0, 1].

    """

    values: np.ndarray

    def __post_init__(self):
        if np.any(~(self.values >= 0)) or np.any(~(self.values <= 1)):
            raise DomainError("values", "local fdrs must lie in [0, 1]")
        self.values.setflags(write=False)

    def __len__(self) -> int:
        return len(self.values)


def select_sigma_grid(z: ArrayLike) -> SigmaGrid:
    """
    A data-driven geometric grid of effect standard deviations.

    The smallest grid point is a tenth of the robust (interquartile range) scale of
    |z|, but at least 1, so that the smallest alternative component has at least
    twice the null variance. The largest covers twice the largest observed |z|: it
    is 2 sqrt(max(0, max z² - 1) + 1). Consecutive grid points differ by a factor
    sqrt(2), and the grid is extended until it reaches the largest point. If no z²
    exceeds 1, there is no evidence of any effect and the grid consists of the
    smallest point only.

    Parameters
    ----------
    z : array
        z statistics; at least two, not all equal.

    Returns
    -------
    SigmaGrid
        The grid.

    """

    z = np.asarray(z, dtype=float)
    if len(z) < 2:
        raise DomainError("z", "at least two statistics are needed to select a grid")
    if np.all(z == z[0]) or np.any(~np.isfinite(z)):
        raise DomainError("z", "the statistics must be finite and not all equal")

    abs_z = np.abs(z)
    robust_scale = stats.iqr(abs_z) / (2 * stats.norm.ppf(0.75))
    sigma_min = max(robust_scale / 10, SIGMA_FLOOR)
    max_zsq = float(np.max(z ** 2))
    if max_zsq < 1:
        return SigmaGrid([sigma_min])

    sigma_max = 2 * np.sqrt(max(0.0, max_zsq - 1) + 1)
    if sigma_max <= sigma_min:
        return SigmaGrid([sigma_min])
    k = int(np.ceil(np.log(sigma_max / sigma_min) / np.log(GRID_RATIO))) + 1
    grid = SigmaGrid(sigma_min * GRID_RATIO ** np.arange(k))
    logger.debug("Selected a grid of %d points from %g to %g", k, sigma_min, grid.sigmas[-1])
    return grid


def _log_component_densities(z: np.ndarray, grid: SigmaGrid) -> np.ndarray:
    sds = np.concatenate(([1.0], grid.marginal_sds()))
    return stats.norm.logpdf(z[:, np.newaxis], loc=0.0, scale=sds[np.newaxis, :])


def _scaled_component_densities(z: np.ndarray, grid: SigmaGrid):
    """
    The component densities of each test divided by their largest value.

    Returns the scaled densities as a (components, tests) array, together with
    the sum of the logs of the divisors.

    """

    log_densities = _log_component_densities(z, grid)
    log_scale = log_densities.max(axis=1)
    scaled = np.exp(log_densities - log_scale[:, np.newaxis])
    return np.ascontiguousarray(scaled.T), float(np.sum(log_scale))


def em_fit(
    z: ArrayLike,
    grid: SigmaGrid,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    init: Union[EmInit, SeededRng, None] = None,
    null_penalty: float = 0.0,
) -> MixtureFit:
    """
    Fit the null proportion and the alternative weights by the EM algorithm.

    The model is pi0 N(0, 1) + (1 - pi0) sum_k w_k N(0, 1 + sigma_k²). Each
    iteration computes the posterior component memberships (E-step) and replaces
    the weights by their averages (M-step). The component densities of each test
    are divided by their largest value once, before the first iteration. The
    iteration stops when the relative increase of the objective falls below tol,
    or after max_iter iterations.

    Parameters
    ----------
    z : array
        z statistics.
    grid : SigmaGrid
        Grid of effect standard deviations.
    tol : float
        Tolerance for the relative increase of the objective.
    max_iter : int
        Maximum number of iterations.
    init : EmInit or SeededRng, optional
        Starting values, or a random number generator for random starting values.
        By default pi0 = 0.5 and uniform alternative weights are used.
    null_penalty : float
        Non-negative pseudo-count added to the null component in every M-step,
        which favours larger values of pi0. No penalty is used by default.

    Returns
    -------
    MixtureFit
        The fit.

    Raises
    ------
    NumericError
        If the log-likelihood becomes non-finite.

    """

    if not tol > 0:
        raise DomainError("tol", f"must be positive, not {tol}")
    if max_iter < 1:
        raise DomainError("max_iter", f"must be at least 1, not {max_iter}")
    if not null_penalty >= 0:
        raise DomainError("null_penalty", f"must be non-negative, not {null_penalty}")
    z = np.asarray(z, dtype=float)
    if len(z) < 1 or np.any(~np.isfinite(z)):
        raise DomainError("z", "need at least one finite statistic")

    if isinstance(init, SeededRng):
        init = EmInit.random(grid.k, init)
    weights = (init or EmInit()).full_weights(grid.k)
    # rows are components; reductions run in a fixed order without BLAS
    densities, log_offset = _scaled_component_densities(z, grid)
    pseudo_counts = np.zeros(grid.k + 1)
    pseudo_counts[0] = null_penalty

    def objective(weights: np.ndarray):
        marginal = np.sum(densities * weights[:, np.newaxis], axis=0)
        with np.errstate(divide="ignore"):
            value = float(np.sum(np.log(marginal))) + log_offset
            if null_penalty > 0:
                value += null_penalty * float(np.log(weights[0]))
        return value, marginal

    loglik, marginal = objective(weights)
    if not np.isfinite(loglik):
        raise NumericError("The initial log-likelihood is not finite", iteration=0)

    trace = [loglik]
    converged = False
    iteration = 0
    while iteration < max_iter:
        iteration += 1
        memberships = weights * np.sum(densities / marginal, axis=1)
        weights = (memberships + pseudo_counts) / (len(z) + null_penalty)

        new_loglik, marginal = objective(weights)
        if not np.isfinite(new_loglik):
            raise NumericError("The log-likelihood is not finite", iteration=iteration)
        trace.append(new_loglik)
        increase = new_loglik - loglik
        loglik = new_loglik
        if increase < tol * abs(loglik):
            converged = True
            break

    if not converged:
        message = f"The EM algorithm did not converge in {max_iter} iterations."
        logger.warning(message)
        record_warning(Warning(message), source="em_fit")
    logger.debug(
        "EM fit: pi0 = %.6f after %d iterations (log-likelihood %.6f)",
        weights[0],
        iteration,
        loglik,
    )

    pi0_hat = float(weights[0])
    alternative = weights[1:]
    if alternative.sum() > 0:
        omega = alternative / alternative.sum()
    else:
        omega = np.full(grid.k, 1.0 / grid.k)
    return MixtureFit(
        pi0_hat=pi0_hat,
        weights=omega,
        grid=grid,
        loglik_trace=np.array(trace),
        iterations=iteration,
        converged=converged,
    )


def fitted_mixture_density(fit: MixtureFit) -> MixtureDensity:
    """
    The fitted marginal density of z,
    pi0 N(0, 1) + (1 - pi0) sum_k w_k N(0, 1 + sigma_k²).

    """

    weights = fit.full_weights()
    weights = weights / weights.sum()
    components = [DistFamily.normal(0.0, 1.0)] + [
        DistFamily.normal(0.0, sd) for sd in fit.grid.marginal_sds()
    ]
    return MixtureDensity.of(weights, components)


def local_fdr(z: ArrayLike, fit: MixtureFit) -> LocalFdrVector:
    """
    The fitted local fdrs pi0 f0(z_i) / f_c(z_i).

    Parameters
    ----------
    z : array
        z statistics.
    fit : MixtureFit
        Fitted model.

    Returns
    -------
    LocalFdrVector
        The local fdrs, clamped to [0, 1].

    Raises
    ------
    NumericError
        If the fitted density vanishes at a statistic.

    """

    z = np.asarray(z, dtype=float)
    if fit.pi0_hat == 0:
        return LocalFdrVector(np.zeros(len(z)))
    with np.errstate(divide="ignore"):
        log_weights = np.log(fit.full_weights())
    joint = _log_component_densities(z, fit.grid) + log_weights
    log_marginal = special.logsumexp(joint, axis=1)
    if np.any(~np.isfinite(log_marginal)):
        index = int(np.flatnonzero(~np.isfinite(log_marginal))[0])
        raise NumericError("The fitted density vanishes", index=index)
    u = np.exp(joint[:, 0] - log_marginal)
    return LocalFdrVector(np.clip(u, 0, 1))


def bayes_path(u: Union[LocalFdrVector, ArrayLike], label: str = "bayes") -> RejectionPath:
    """
    The Bayesian FDR rejection path.

    Tests are ordered by increasing local fdr, and the Bayesian FDR of rejecting
    the first i tests is the mean of their local fdrs. Tests with equal local fdrs
    share the value of rejecting all of them.

    Parameters
    ----------
    u : LocalFdrVector or array
        Local fdrs.
    label : str
        Procedure name.

    Returns
    -------
    RejectionPath
        The rejection path.

    """

    values = u.values if isinstance(u, LocalFdrVector) else np.asarray(u, dtype=float)
    if len(values) < 1:
        raise DomainError("u", "at least one local fdr is needed")
    order = np.argsort(values, kind="stable")
    sorted_u = values[order]
    cumulative_mean = np.cumsum(sorted_u) / np.arange(1, len(values) + 1)
    bfdr = share_within_ties(sorted_u, cumulative_mean)
    return RejectionPath.create(
        thresholds=sorted_u, fdr=np.clip(bfdr, 0, 1), order=order, label=label
    )


def expected_path(z: ArrayLike, fit: MixtureFit) -> RejectionPath:
    """
    The p-value rejection path with the fitted null proportion.

    If the fit is adequate, the Bayesian rejection path of the fit converges to this
    path as the number of tests grows.

    """

    z = np.asarray(z, dtype=float)
    return pvalue_path(pvalue_of_zsq(z ** 2), fit.pi0_estimate(), label="expected")
