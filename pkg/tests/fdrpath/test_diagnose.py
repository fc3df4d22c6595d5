import numpy as np
import pytest
from scipy import stats

from fdrpath.diagnose import (
    DEFAULT_LEVELS,
    DiagnosisReport,
    DiagnosisRow,
    SquaredMixture,
    diagnose_against,
    flag_anticonservative,
    quantile_diagnosis,
    report_table,
)
from fdrpath.exceptions import DomainError
from fdrpath.peb import MixtureFit, SigmaGrid
from fdrpath.statdist import SeededRng
from fdrpath.util.types import Direction


def _sample(dist: SquaredMixture, m: int, rng: SeededRng) -> np.ndarray:
    generator = rng.generator
    component = generator.choice(len(dist.weights), size=m, p=dist.weights)
    return dist.variances[component] * generator.chisquare(1, m)


def _report(rows):
    return DiagnosisReport(
        rows=tuple(
            DiagnosisRow(
                level=level,
                sample_quantile=sample,
                fitted_quantile=fitted,
                standard_error=0.01,
                z_statistic=0.0,
                p_value=p_value,
                direction=Direction.NONE,
            )
            for level, sample, fitted, p_value in rows
        ),
        m=10000,
    )


MIXTURE = SquaredMixture(weights=np.array([0.6, 0.4]), variances=np.array([1.0, 11.0]))


# SquaredMixture


def test_squared_mixture_weights_must_sum_to_1():
    with pytest.raises(DomainError):
        SquaredMixture(weights=np.array([0.5, 0.6]), variances=np.array([1.0, 2.0]))


def test_squared_mixture_variances_must_be_positive():
    with pytest.raises(DomainError):
        SquaredMixture(weights=np.array([1.0]), variances=np.array([0.0]))


def test_squared_mixture_of_the_null_is_chi_square_1():
    null = SquaredMixture(weights=np.array([1.0]), variances=np.array([1.0]))

    for level in DEFAULT_LEVELS:
        assert null.quantile(level) == pytest.approx(stats.chi2.ppf(level, df=1))


def test_squared_mixture_quantile_inverts_cdf():
    for level in (0.001, 0.1, 0.5, 0.9, 0.999):
        assert float(MIXTURE.cdf(MIXTURE.quantile(level))) == pytest.approx(
            level, abs=1e-7
        )


def test_squared_mixture_of_a_fit():
    fit = MixtureFit(
        pi0_hat=0.6,
        weights=np.array([0.5, 0.5]),
        grid=SigmaGrid([1.0, 3.0]),
        loglik_trace=np.array([0.0]),
        iterations=1,
        converged=True,
    )
    dist = SquaredMixture.from_fit(fit)

    np.testing.assert_allclose(dist.weights, [0.6, 0.2, 0.2])
    np.testing.assert_allclose(dist.variances, [1.0, 2.0, 10.0])


def test_scaled_squared_mixture():
    scaled = MIXTURE.scaled(2.0)

    assert scaled.quantile(0.5) == pytest.approx(2 * MIXTURE.quantile(0.5))


# diagnose_against


def test_standard_error_of_the_sample_quantile():
    zsq = _sample(MIXTURE, 10000, SeededRng(1))
    report = diagnose_against(zsq, MIXTURE)

    for row in report.rows:
        density = float(MIXTURE.pdf(row.fitted_quantile))
        assert row.standard_error == pytest.approx(
            np.sqrt(row.level * (1 - row.level) / (10000 * density ** 2))
        )


def test_standard_error_formula():
    # median of a distribution with density 0.3989 at the median, 10000 tests
    assert np.sqrt(0.5 * 0.5 / (10000 * 0.3989 ** 2)) == pytest.approx(0.01253, abs=1e-5)


def test_report_has_a_row_per_level():
    zsq = _sample(MIXTURE, 1000, SeededRng(2))
    report = diagnose_against(zsq, MIXTURE, levels=[0.25, 0.5, 0.75])

    assert report.levels == (0.25, 0.5, 0.75)
    assert report.m == 1000
    assert len(report.p_values) == 3
    assert all(0 < p <= 1 for p in report.p_values)


def test_diagnosis_of_the_true_distribution_has_the_nominal_size():
    rng = SeededRng(3)
    p_values = []
    for replicate in range(200):
        zsq = _sample(MIXTURE, 10000, rng.child(replicate))
        p_values.extend(diagnose_against(zsq, MIXTURE).p_values)
    share = np.mean(np.array(p_values) < 0.05)

    assert 0.02 <= share <= 0.09


def test_overestimated_quantiles_are_not_flagged():
    zsq = _sample(MIXTURE, 10000, SeededRng(4))
    report = diagnose_against(zsq, MIXTURE.scaled(2.0))

    assert all(row.direction == Direction.FITTED_OVER for row in report.rows)
    assert not flag_anticonservative(report)


def test_underestimated_quantiles_are_flagged():
    zsq = _sample(MIXTURE, 10000, SeededRng(5))
    report = diagnose_against(zsq, MIXTURE.scaled(0.5))

    assert all(row.direction == Direction.FITTED_UNDER for row in report.rows)
    assert flag_anticonservative(report)


def test_diagnosis_is_invariant_under_rescaling():
    zsq = _sample(MIXTURE, 2000, SeededRng(8))
    report = diagnose_against(zsq, MIXTURE.scaled(1.2))
    rescaled = diagnose_against(3 * zsq, MIXTURE.scaled(3.6))

    np.testing.assert_allclose(rescaled.p_values, report.p_values, rtol=1e-5)


def test_diagnosis_needs_100_tests():
    with pytest.raises(DomainError) as excinfo:
        diagnose_against(np.ones(99), MIXTURE)

    assert excinfo.value.field == "zsq"


@pytest.mark.parametrize("level", [0, 1, 1.5])
def test_diagnosis_levels_must_lie_in_the_open_unit_interval(level):
    with pytest.raises(DomainError):
        diagnose_against(np.arange(100.0), MIXTURE, levels=[0.5, level])


def test_quantile_diagnosis_uses_the_fitted_distribution():
    fit = MixtureFit(
        pi0_hat=0.6,
        weights=np.array([1.0]),
        grid=SigmaGrid([np.sqrt(10.0)]),
        loglik_trace=np.array([0.0]),
        iterations=1,
        converged=True,
    )
    zsq = _sample(MIXTURE, 1000, SeededRng(6))
    report = quantile_diagnosis(zsq, fit)

    for row in report.rows:
        assert row.fitted_quantile == pytest.approx(MIXTURE.quantile(row.level))


# flag_anticonservative


def test_nothing_is_flagged_without_small_pvalues():
    report = _report([(0.1, 0.05, 0.02, 0.2), (0.2, 0.1, 0.08, 0.6)])

    assert not flag_anticonservative(report, 0.05)


def test_underestimated_low_deciles_are_flagged():
    # fitted quantiles fall short of the sample quantiles for the lowest deciles
    report = _report(
        [
            (0.1, 0.030, 0.012, 0.0005),
            (0.2, 0.090, 0.050, 0.0008),
            (0.3, 0.170, 0.130, 0.003),
            (0.4, 0.290, 0.280, 0.41),
        ]
    )

    assert flag_anticonservative(report, 0.05)


def test_overestimated_deciles_are_not_flagged():
    # fitted quantiles exceed the sample quantiles
    report = _report(
        [
            (0.1, 0.012, 0.020, 0.048),
            (0.2, 0.050, 0.065, 0.021),
            (0.3, 0.110, 0.150, 0.001),
            (0.4, 0.200, 0.260, 0.003),
        ]
    )

    assert not flag_anticonservative(report, 0.05)


def test_flag_threshold_is_inclusive():
    report = _report([(0.1, 0.03, 0.01, 0.05)])

    assert flag_anticonservative(report, 0.05)
    assert not flag_anticonservative(report, 0.04)


def test_flag_threshold_must_be_a_probability():
    with pytest.raises(DomainError):
        flag_anticonservative(_report([(0.1, 0.03, 0.01, 0.05)]), 0)


# report_table


def test_report_table():
    zsq = _sample(MIXTURE, 1000, SeededRng(7))
    table = report_table(diagnose_against(zsq, MIXTURE))

    assert list(table.index) == ["sample quantile", "fitted quantile", "p-value"]
    assert list(table.columns) == [f"{10 * i}%" for i in range(1, 10)]
    assert table.loc["fitted quantile", "50%"] == pytest.approx(MIXTURE.quantile(0.5))
