import numpy as np
import pytest

from fdrpath.exceptions import DomainError
from fdrpath.harness.truth import TruthEval, evaluate_truth
from fdrpath.twogroups import TestBattery


def _battery(gamma_truth):
    m = len(gamma_truth)
    return TestBattery.from_z(np.linspace(3, 0.1, m), gamma_truth=gamma_truth)


def test_false_discovery_and_non_discovery_proportions():
    # one of two rejections is null, one of two non-rejections is an alternative
    battery = _battery([1, 0, 1, 0])
    truth = evaluate_truth(battery, [0, 1], 0.1)

    assert truth.fdp == pytest.approx(0.5)
    assert truth.fnr == pytest.approx(0.5)
    assert truth.rejections == 2
    assert truth.alpha == 0.1


def test_empty_rejection_set():
    truth = evaluate_truth(_battery([1, 0, 1]), [], 0.05)

    assert truth.fdp == 0
    assert truth.fnr == pytest.approx(2 / 3)
    assert truth.rejections == 0


def test_rejecting_exactly_the_alternatives():
    truth = evaluate_truth(_battery([0, 1, 1, 0]), [2, 1], 0.05)

    assert truth.fdp == 0
    assert truth.fnr == 0


def test_rejecting_everything():
    truth = evaluate_truth(_battery([0, 1, 1, 0]), [0, 1, 2, 3], 0.05)

    assert truth.fdp == 0.5
    assert truth.fnr == 0


def test_truth_requires_latent_indicators():
    with pytest.raises(DomainError):
        evaluate_truth(TestBattery.from_z([1.0, 2.0]), [0], 0.1)


@pytest.mark.parametrize("rejected", [[4], [-1], [0, 0]])
def test_rejected_indices_must_be_valid(rejected):
    with pytest.raises(DomainError) as excinfo:
        evaluate_truth(_battery([0, 1, 1, 0]), rejected, 0.1)

    assert excinfo.value.field == "rejected"


def test_error_rates_must_be_proportions():
    with pytest.raises(DomainError):
        TruthEval(fdp=1.5, fnr=0, rejections=1, alpha=0.1)
