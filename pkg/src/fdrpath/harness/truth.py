from dataclasses import dataclass

import numpy as np

from fdrpath.exceptions import DomainError
from fdrpath.statdist import ArrayLike
from fdrpath.twogroups import TestBattery


@dataclass(frozen=True)
class TruthEval:
    """
    The realized error rates of a rejection set.

    Parameters
    ----------
    fdp : float
        False discovery proportion, the share of nulls among the rejected tests (0
        if nothing is rejected).
    fnr : float
        False non-discovery proportion, the share of alternatives among the tests
        which are not rejected (0 if everything is rejected).
    rejections : int
        Number of rejected tests.
    alpha : float
        FDR level at which the tests were rejected.

    """

    fdp: float
    fnr: float
    rejections: int
    alpha: float

    def __post_init__(self):
        if not 0 <= self.fdp <= 1:
            raise DomainError("fdp", f"must lie in [0, 1], not {self.fdp}")
        if not 0 <= self.fnr <= 1:
            raise DomainError("fnr", f"must lie in [0, 1], not {self.fnr}")


def evaluate_truth(battery: TestBattery, rejected: ArrayLike, alpha: float) -> TruthEval:
    """
    Evaluate a rejection set against the latent truth of a simulated battery.

    Parameters
    ----------
    battery : TestBattery
        Battery with latent indicators.
    rejected : array
        Indices of the rejected tests.
    alpha : float
        FDR level of the rejection.

    Returns
    -------
    TruthEval
        The realized error rates.

    Raises
    ------
    DomainError
        If the battery carries no latent indicators or an index is invalid.

    """

    truth = battery.gamma_truth
    if truth is None:
        raise DomainError("battery", "the battery has no latent truth")
    rejected = np.asarray(rejected, dtype=np.int64)
    if len(rejected) and (rejected.min() < 0 or rejected.max() >= battery.m):
        raise DomainError("rejected", "rejected indices must refer to tests of the battery")
    if len(np.unique(rejected)) != len(rejected):
        raise DomainError("rejected", "rejected indices must be distinct")

    is_rejected = np.zeros(battery.m, dtype=bool)
    is_rejected[rejected] = True
    n_rejected = int(is_rejected.sum())
    false_discoveries = int(np.count_nonzero(is_rejected & (truth == 0)))
    missed = int(np.count_nonzero(~is_rejected & (truth == 1)))
    return TruthEval(
        fdp=false_discoveries / max(1, n_rejected),
        fnr=missed / max(1, battery.m - n_rejected),
        rejections=n_rejected,
        alpha=alpha,
    )
