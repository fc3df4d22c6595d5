"""
Rejection paths: the sequence of estimated false discovery rates obtained by
rejecting the i most significant tests, for i = 1, ..., m.

Paths of different procedures over the same battery are compared position by
position. Paths hold the raw estimates; nothing here makes them monotone.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np
from scipy import stats

from fdrpath.exceptions import DomainError
from fdrpath.statdist import ArrayLike

if TYPE_CHECKING:
    from fdrpath.freq import Pi0Estimate


@dataclass(frozen=True, eq=False)
class RejectionPath:
    """
    A rejection path.

    Parameters
    ----------
    thresholds : array
        Decision statistic of each position, in rejection order (most significant
        first). The statistic depends on the procedure: a p-value, a local fdr or a
        weighted likelihood ratio.
    fdr : array
        Estimated FDR when rejecting the tests up to and including the position.
    order : array
        Index (in the battery) of the test at each position.
    label : str
        Procedure name.
    pi0_used : Pi0Estimate, optional
        Null proportion the procedure used.

    """

    thresholds: np.ndarray
    fdr: np.ndarray
    order: np.ndarray
    label: str
    pi0_used: Optional["Pi0Estimate"] = field(default=None)

    def __post_init__(self):
        m = len(self.thresholds)
        if m < 1:
            raise DomainError("thresholds", "a rejection path needs at least one test")
        if len(self.fdr) != m or len(self.order) != m:
            raise DomainError("fdr", "thresholds, fdr and order must have equal lengths")
        if np.any(np.isnan(self.fdr)) or np.any(self.fdr < 0) or np.any(self.fdr > 1):
            raise DomainError("fdr", "FDR estimates must lie in [0, 1]")
        for array in (self.thresholds, self.fdr, self.order):
            array.setflags(write=False)

    @staticmethod
    def create(
        thresholds: ArrayLike,
        fdr: ArrayLike,
        order: ArrayLike,
        label: str,
        pi0_used: Optional["Pi0Estimate"] = None,
    ) -> RejectionPath:
        return RejectionPath(
            thresholds=np.array(thresholds, dtype=float),
            fdr=np.array(fdr, dtype=float),
            order=np.array(order, dtype=np.int64),
            label=label,
            pi0_used=pi0_used,
        )

    @property
    def m(self) -> int:
        return len(self.fdr)

    def __len__(self) -> int:
        return self.m


@dataclass(frozen=True, eq=False)
class PathComparison:
    """
    The position-by-position comparison of two rejection paths.

    Parameters
    ----------
    fdr_a : array
        FDR estimates of the first path.
    fdr_b : array
        FDR estimates of the second path.
    diff : array
        fdr_a - fdr_b.
    ratio : array
        fdr_a / fdr_b where fdr_b > 0, NaN elsewhere.
    sup_norm : float
        Largest absolute difference.
    label_a : str
        Label of the first path.
    label_b : str
        Label of the second path.

    """

    fdr_a: np.ndarray
    fdr_b: np.ndarray
    diff: np.ndarray
    ratio: np.ndarray
    sup_norm: float
    label_a: str
    label_b: str

    @property
    def length(self) -> int:
        return len(self.diff)


def share_within_ties(thresholds: ArrayLike, values: ArrayLike) -> np.ndarray:
    """
    Give all positions with equal thresholds the value at the end of their tie group.

    Parameters
    ----------
    thresholds : array
        Non-decreasing statistics in rejection order.
    values : array
        One value per position.

    Returns
    -------
    array
        The values, constant within each group of tied thresholds.

    """

    thresholds = np.asarray(thresholds, dtype=float)
    values = np.asarray(values, dtype=float)
    ends = np.searchsorted(thresholds, thresholds, side="right") - 1
    return values[ends]


def tie_group_end(path: RejectionPath, k: int) -> int:
    """
    Extend a rejection count to the end of the tie group it ends in.

    Parameters
    ----------
    path : RejectionPath
        Rejection path.
    k : int
        Number of rejections.

    Returns
    -------
    int
        The smallest count >= k which does not split tests with equal statistics.

    """

    thresholds = path.thresholds
    while 0 < k < path.m and thresholds[k] == thresholds[k - 1]:
        k += 1
    return k


def cutoff_at_level(path: RejectionPath, alpha: float) -> int:
    """
    The number of rejections of a procedure at level alpha.

    This is the largest k for which the estimated FDR at position k does not exceed
    alpha (0 if there is none), extended so that no group of tied statistics is
    split. The path need not be monotone.

    Parameters
    ----------
    path : RejectionPath
        Rejection path.
    alpha : float
        FDR level, in (0, 1].

    Returns
    -------
    int
        Number of rejections.

    """

    if not 0 < alpha <= 1:
        raise DomainError("alpha", f"must lie in (0, 1], not {alpha}")
    below = np.flatnonzero(path.fdr <= alpha)
    if len(below) == 0:
        return 0
    return tie_group_end(path, int(below[-1]) + 1)


def rejected_indices(path: RejectionPath, alpha: float) -> np.ndarray:
    """Battery indices of the tests rejected at level alpha."""

    return path.order[: cutoff_at_level(path, alpha)]


def compare_paths(a: RejectionPath, b: RejectionPath) -> PathComparison:
    """
    Compare two rejection paths of the same battery position by position.

    Raises
    ------
    DomainError
        If the paths have different lengths.

    """

    if a.m != b.m:
        raise DomainError("b", f"path lengths differ ({a.m} and {b.m})")
    diff = a.fdr - b.fdr
    ratio = np.full(a.m, np.nan)
    positive = b.fdr > 0
    ratio[positive] = a.fdr[positive] / b.fdr[positive]
    return PathComparison(
        fdr_a=a.fdr,
        fdr_b=b.fdr,
        diff=diff,
        ratio=ratio,
        sup_norm=float(np.max(np.abs(diff))),
        label_a=a.label,
        label_b=b.label,
    )


def rank_correlation(x: ArrayLike, y: ArrayLike) -> float:
    """
    Spearman rank correlation, with average ranks for ties.

    Raises
    ------
    DomainError
        If the sequences have different lengths, fewer than two elements, or one of
        them is constant.

    """

    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise DomainError("y", "the sequences must have the same length")
    if len(x) < 2:
        raise DomainError("x", "at least two values are needed")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise DomainError("x", "the rank correlation of a constant sequence is undefined")
    return float(stats.spearmanr(x, y)[0])


def kendall_distance(order_a: ArrayLike, order_b: ArrayLike) -> int:
    """
    The number of pairs of tests which two orderings rank differently.

    Parameters
    ----------
    order_a : array
        A permutation of test indices.
    order_b : array
        Another permutation of the same indices.

    Returns
    -------
    int
        Number of discordant pairs.

    """

    order_a = np.asarray(order_a, dtype=np.int64)
    order_b = np.asarray(order_b, dtype=np.int64)
    if sorted(order_a.tolist()) != sorted(order_b.tolist()):
        raise DomainError("order_b", "the orderings must permute the same tests")
    n = len(order_a)
    if n < 2:
        return 0
    position_a = np.empty(n, dtype=np.int64)
    position_b = np.empty(n, dtype=np.int64)
    rank = {index: i for i, index in enumerate(sorted(order_a.tolist()))}
    position_a[[rank[i] for i in order_a.tolist()]] = np.arange(n)
    position_b[[rank[i] for i in order_b.tolist()]] = np.arange(n)
    tau = stats.kendalltau(position_a, position_b)[0]
    return int(round((1 - tau) * n * (n - 1) / 4))
