import numpy as np
import pytest
from scipy import stats

from fdrpath.exceptions import DomainError, UnsupportedMethodError
from fdrpath.freq import bh_path, pvalue_path, pvalue_to_z
from fdrpath.grouped import (
    GroupSpec,
    group_local_fdr,
    grouped_bayes_path,
    grouped_fdr_path,
    null_wlr_cdf,
    simulate_grouped_battery,
    weighted_p_path,
    wlr,
)
from fdrpath.peb import bayes_path
from fdrpath.rpath import compare_paths, kendall_distance
from fdrpath.statdist import DistFamily, SeededRng
from fdrpath.twogroups import TestBattery, oracle_local_fdr_battery
from fdrpath.util.types import CdfMethod


def _zsq_with_lr(lr: float, k: float) -> float:
    """The z² at which the likelihood ratio of N(0, 1 + k) against N(0, 1) is lr."""

    return (np.log(lr) + 0.5 * np.log1p(k)) * 2 * (1 + k) / k


def _battery(zsq, group) -> TestBattery:
    return TestBattery.from_z(np.sqrt(np.asarray(zsq, dtype=float)), group=group)


# GroupSpec


def test_group_spec_defaults_to_chi_square_nulls():
    spec = GroupSpec.wakefield([0.9, 0.5], [4, 10])

    assert spec.k == 2
    assert spec.nulls == (DistFamily.chi_square_1(), DistFamily.chi_square_1())
    assert spec.alts[1] == DistFamily.gamma(0.5, 22)


def test_group_spec_needs_one_alternative_per_group():
    with pytest.raises(DomainError):
        GroupSpec(pi0s=(0.5, 0.5), alts=(DistFamily.gamma(0.5, 22),))


def test_group_spec_needs_null_proportions():
    with pytest.raises(DomainError):
        GroupSpec.wakefield([1.2], [10])


def test_log_prior_odds():
    spec = GroupSpec.wakefield([0.9, 1.0, 0.0], [4, 4, 4])

    assert spec.log_prior_odds(0) == pytest.approx(np.log(1 / 9))
    assert spec.log_prior_odds(1) == -np.inf
    with pytest.raises(DomainError):
        spec.log_prior_odds(2)


# wlr


def test_wlr_of_even_odds_and_unit_ratio_is_1():
    spec = GroupSpec.wakefield([0.5], [10])
    statistic = wlr([_zsq_with_lr(1, 10)], [0], spec)

    assert statistic.value[0] == pytest.approx(1, rel=1e-10)


def test_wlr_weights_the_likelihood_ratio_by_the_prior_odds():
    spec = GroupSpec.wakefield([0.9], [10])
    statistic = wlr([_zsq_with_lr(9, 10)], [0], spec)

    assert statistic.value[0] == pytest.approx(1.0, rel=1e-10)


def test_wlr_of_a_group_without_alternatives_is_0():
    spec = GroupSpec.wakefield([1.0, 0.5], [10, 10])
    statistic = wlr([0.0, 3.0, 50.0, 3.0], [0, 0, 0, 1], spec)

    np.testing.assert_array_equal(statistic.value[:3], 0.0)
    assert statistic.value[3] > 0


def test_wlr_of_a_group_without_nulls_is_undefined():
    spec = GroupSpec.wakefield([0.0], [10])

    with pytest.raises(DomainError):
        wlr([1.0], [0], spec)


def test_wlr_requires_known_groups():
    spec = GroupSpec.wakefield([0.5], [10])

    with pytest.raises(DomainError) as excinfo:
        wlr([1.0, 2.0], [0, 1], spec)

    assert excinfo.value.field == "group"


# null_wlr_cdf


@pytest.mark.parametrize("alt", [DistFamily.gamma(0.5, 22), DistFamily.gamma(1.0, 22)])
def test_analytic_and_monte_carlo_cdfs_agree(alt):
    spec = GroupSpec(pi0s=(0.7,), alts=(alt,))
    analytic = null_wlr_cdf(spec, CdfMethod.ANALYTIC)
    monte_carlo = null_wlr_cdf(spec, "monte-carlo", n_mc=10 ** 6, rng=SeededRng(1))
    null_zsq = stats.chi2.ppf(np.linspace(0.001, 0.999, 200), df=1)
    t = wlr(null_zsq, np.zeros(200, dtype=int), spec).value

    assert monte_carlo.method == CdfMethod.MONTE_CARLO
    assert np.max(np.abs(analytic.cdf(0, t) - monte_carlo.cdf(0, t))) <= 2e-3


def test_analytic_cdf_composes_the_null_cdf_with_the_inverse_ratio():
    spec = GroupSpec.wakefield([0.6], [4])
    cdfs = null_wlr_cdf(spec)
    zsq = np.array([0.5, 2.0, 8.0])
    t = wlr(zsq, [0, 0, 0], spec).value

    np.testing.assert_allclose(cdfs.cdf(0, t), stats.chi2.cdf(zsq, df=1), rtol=1e-8)


def test_null_wlr_cdf_of_a_group_without_alternatives_is_a_step_at_0():
    spec = GroupSpec.wakefield([1.0], [10])
    cdfs = null_wlr_cdf(spec)

    np.testing.assert_array_equal(cdfs.cdf(0, [-1.0, 0.0, 0.5, 100.0]), [0, 1, 1, 1])


def test_null_wlr_cdf_vanishes_below_the_smallest_wlr():
    k = 10
    pi0 = 0.5
    spec = GroupSpec.wakefield([pi0], [k])
    cdfs = null_wlr_cdf(spec)
    smallest = (1 - pi0) / pi0 / np.sqrt(1 + k)

    assert float(cdfs.cdf(0, 0.99 * smallest)) == 0
    assert float(cdfs.cdf(0, 1.01 * smallest)) > 0


def test_analytic_cdf_requires_a_monotone_likelihood_ratio():
    spec = GroupSpec(pi0s=(0.5,), alts=(DistFamily.gamma(0.3, 22),))

    with pytest.raises(UnsupportedMethodError):
        null_wlr_cdf(spec, CdfMethod.ANALYTIC)


def test_monte_carlo_cdf_of_a_non_monotone_ratio():
    spec = GroupSpec(pi0s=(0.5,), alts=(DistFamily.gamma(0.3, 22),))
    cdfs = null_wlr_cdf(spec, CdfMethod.MONTE_CARLO, n_mc=1000, rng=SeededRng(2))
    values = cdfs.cdf(0, [0.0, 1.0, 1e6])

    assert np.all(np.diff(values) >= 0)
    assert values[-1] == 1


def test_monte_carlo_cdf_is_deterministic():
    spec = GroupSpec.wakefield([0.9, 0.5], [4, 10])
    a = null_wlr_cdf(spec, CdfMethod.MONTE_CARLO, n_mc=1000, rng=SeededRng(3))
    b = null_wlr_cdf(spec, CdfMethod.MONTE_CARLO, n_mc=1000, rng=SeededRng(3))
    t = np.linspace(0, 5, 11)

    for k in range(2):
        np.testing.assert_array_equal(a.cdf(k, t), b.cdf(k, t))


def test_monte_carlo_sample_size_must_be_positive():
    with pytest.raises(DomainError):
        null_wlr_cdf(GroupSpec.wakefield([0.5], [10]), CdfMethod.MONTE_CARLO, n_mc=0)


# grouped_fdr_path


def test_grouped_fdr_of_two_tests():
    spec = GroupSpec.wakefield([0.5], [10])
    battery = _battery([stats.chi2.isf(0.01, df=1), 0.1], [0, 0])
    path = grouped_fdr_path(battery, spec, null_wlr_cdf(spec))

    np.testing.assert_array_equal(path.order, [0, 1])
    assert path.fdr[0] == pytest.approx(2 * 0.5 * 0.01 / 1, rel=1e-8)
    assert path.label == "grouped-wlr"


def test_single_group_fdr_path_is_the_pvalue_path():
    spec = GroupSpec.wakefield([0.6], [10])
    battery = simulate_grouped_battery(spec, SeededRng(4), group_sizes=[2000])
    path = grouped_fdr_path(battery, spec, null_wlr_cdf(spec))
    expected = pvalue_path(battery.pvalue, 0.6, label="oracle-freq")

    np.testing.assert_array_equal(path.order, expected.order)
    np.testing.assert_allclose(path.fdr, expected.fdr, rtol=1e-6, atol=1e-12)


def test_grouped_fdr_path_requires_group_labels():
    spec = GroupSpec.wakefield([0.5], [10])
    battery = TestBattery.from_z([1.0, 2.0])

    with pytest.raises(DomainError) as excinfo:
        grouped_fdr_path(battery, spec, null_wlr_cdf(spec))

    assert excinfo.value.field == "group"


def test_grouped_fdr_path_requires_a_cdf_per_group():
    spec = GroupSpec.wakefield([0.5, 0.9], [10, 4])
    battery = _battery([1.0, 4.0], [0, 1])

    with pytest.raises(DomainError):
        grouped_fdr_path(battery, spec, null_wlr_cdf(GroupSpec.wakefield([0.5], [10])))


# grouped_bayes_path


def test_single_group_bayes_path_is_the_oracle_bayes_path():
    spec = GroupSpec.wakefield([0.5], [10])
    battery = simulate_grouped_battery(spec, SeededRng(5), group_sizes=[2000])
    u = oracle_local_fdr_battery(battery, spec.two_groups(0, battery.m))
    expected = bayes_path(u)
    path = grouped_bayes_path(battery, spec)

    np.testing.assert_array_equal(path.order, expected.order)
    np.testing.assert_allclose(path.fdr, expected.fdr, rtol=0, atol=1e-10)
    assert path.label == "grouped-bayes"


def test_tied_wlr_statistics_share_a_bayes_fdr():
    spec = GroupSpec.wakefield([0.5], [10])
    path = grouped_bayes_path(_battery([4.0, 1.0, 4.0], [0, 0, 0]), spec)

    np.testing.assert_array_equal(path.order, [0, 2, 1])
    assert path.fdr[0] == path.fdr[1]
    assert path.fdr[1] == pytest.approx(path.thresholds[0])


def test_local_fdr_ranks_are_reversed_wlr_ranks():
    spec = GroupSpec.wakefield([0.9, 0.5], [4, 10])
    battery = simulate_grouped_battery(spec, SeededRng(6), group_probs=[0.5, 0.5], m=5000)
    u = group_local_fdr(battery, spec)
    assert battery.group is not None
    statistic = wlr(battery.zsq, battery.group, spec)

    np.testing.assert_array_equal(
        stats.rankdata(u), stats.rankdata(-statistic.log_value)
    )
    path = grouped_bayes_path(battery, spec)
    assert np.all(np.diff(path.thresholds) >= 0)


# weighted_p_path


def test_weighted_p_path():
    spec = GroupSpec.wakefield([0.5, 0.5], [10, 10])
    p = np.array([0.01, 0.04, 0.5, 0.3])
    battery = TestBattery.from_z(pvalue_to_z(p), group=[0, 1, 0, 1])
    path = weighted_p_path(battery, [1.0, 2.0], spec)

    np.testing.assert_array_equal(path.order, [0, 1, 3, 2])
    np.testing.assert_allclose(path.fdr, [0.03, 0.03, 0.15, 0.375], rtol=1e-9)


def test_equal_weights_give_the_bh_ordering():
    spec = GroupSpec.wakefield([0.9, 0.5], [4, 10])
    battery = simulate_grouped_battery(spec, SeededRng(7), group_probs=[0.5, 0.5], m=500)

    np.testing.assert_array_equal(
        weighted_p_path(battery, [3.0, 3.0], spec).order, bh_path(battery.pvalue).order
    )


def test_single_group_weighted_p_path_has_the_bh_ordering():
    spec = GroupSpec.wakefield([0.7], [4])
    battery = simulate_grouped_battery(spec, SeededRng(8), group_sizes=[300])

    np.testing.assert_array_equal(
        weighted_p_path(battery, [0.25], spec).order, bh_path(battery.pvalue).order
    )


def test_weighted_p_ordering_differs_from_the_wlr_ordering():
    spec = GroupSpec.wakefield([0.9, 0.5], [10, 10])
    battery = _battery([8.6, 4.0], [0, 1])
    weights = [(1 - pi0) / pi0 for pi0 in spec.pi0s]
    weighted = weighted_p_path(battery, weights, spec)
    grouped = grouped_bayes_path(battery, spec)

    np.testing.assert_array_equal(weighted.order, [0, 1])
    np.testing.assert_array_equal(grouped.order, [1, 0])
    assert kendall_distance(weighted.order, grouped.order) == 1


@pytest.mark.parametrize("weights", [[1.0], [1.0, 0.0], [1.0, -2.0]])
def test_weighted_p_path_requires_a_positive_weight_per_group(weights):
    spec = GroupSpec.wakefield([0.9, 0.5], [4, 10])
    battery = _battery([1.0, 4.0], [0, 1])

    with pytest.raises(DomainError) as excinfo:
        weighted_p_path(battery, weights, spec)

    assert excinfo.value.field == "weights"


# simulate_grouped_battery


def test_grouped_battery_with_group_sizes():
    spec = GroupSpec.wakefield([0.9, 0.5], [4, 10])
    battery = simulate_grouped_battery(spec, SeededRng(9), group_sizes=[300, 200])

    assert battery.m == 500
    assert battery.group is not None
    np.testing.assert_array_equal(battery.group[:300], 0)
    np.testing.assert_array_equal(battery.group[300:], 1)
    assert battery.has_truth()


def test_grouped_battery_with_group_probabilities():
    spec = GroupSpec.wakefield([0.9, 0.5], [4, 10])
    battery = simulate_grouped_battery(spec, SeededRng(10), group_probs=[0.3, 0.7], m=20000)

    assert battery.group is not None and battery.gamma_truth is not None
    assert np.mean(battery.group == 1) == pytest.approx(0.7, abs=0.02)
    in_group_1 = battery.group == 1
    assert np.mean(battery.gamma_truth[in_group_1]) == pytest.approx(0.5, abs=0.03)
    assert np.mean(battery.gamma_truth[~in_group_1]) == pytest.approx(0.1, abs=0.03)


def test_grouped_battery_is_deterministic():
    spec = GroupSpec.wakefield([0.9, 0.5], [4, 10])
    a = simulate_grouped_battery(spec, SeededRng(11), group_probs=[0.5, 0.5], m=300)
    b = simulate_grouped_battery(spec, SeededRng(11), group_probs=[0.5, 0.5], m=300)

    np.testing.assert_array_equal(a.z, b.z)
    np.testing.assert_array_equal(a.group, b.group)


def test_grouped_battery_needs_sizes_or_probabilities():
    spec = GroupSpec.wakefield([0.9, 0.5], [4, 10])

    with pytest.raises(DomainError):
        simulate_grouped_battery(spec, SeededRng(0))
    with pytest.raises(DomainError):
        simulate_grouped_battery(spec, SeededRng(0), group_sizes=[1, 2], m=3)
    with pytest.raises(DomainError):
        simulate_grouped_battery(spec, SeededRng(0), group_probs=[0.5, 0.6], m=3)


@pytest.mark.slow
def test_grouped_bayes_and_wlr_paths_converge():
    spec = GroupSpec.wakefield([0.9, 0.5], [4, 10])
    cdfs = null_wlr_cdf(spec)
    sup_norms = []
    for seed in range(10):
        battery = simulate_grouped_battery(
            spec, SeededRng(seed), group_probs=[0.5, 0.5], m=20000
        )
        bayes = grouped_bayes_path(battery, spec)
        frequentist = grouped_fdr_path(battery, spec, cdfs)
        np.testing.assert_array_equal(bayes.order, frequentist.order)
        sup_norms.append(compare_paths(bayes, frequentist).sup_norm)

    assert np.median(sup_norms) <= 0.02
