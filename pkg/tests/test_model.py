import math

import numpy as np
import pytest
from scipy import stats as scipy_stats

from analytics.estimators import ArmStats, variance_hat
from analytics.model import (
    ArmModel,
    Bernoulli,
    FamilyMismatchError,
    GaussianKnownVar,
    ParamSpace,
    bernoulli_instance,
    draw_stats,
    fisher_approximation_rows,
    fisher_info,
    gaussian_instance,
    kl,
    sample,
    sup_variance,
    variance,
)


def test_variance_and_fisher_information_are_reciprocal():
    bern = ArmModel(Bernoulli(), 0.3)
    assert variance(bern) == pytest.approx(0.21)
    assert fisher_info(bern) == pytest.approx(1.0 / 0.21)

    gauss = ArmModel(GaussianKnownVar(4.0), 1.5)
    assert variance(gauss) == 4.0
    assert fisher_info(gauss) == 0.25


def test_bernoulli_default_space_rejects_extreme_means():
    with pytest.raises(ValueError, match="outside parameter space"):
        ArmModel(Bernoulli(), 0.99)
    with pytest.raises(ValueError):
        bernoulli_instance([0.5, 0.01])


def test_bernoulli_space_must_stay_inside_unit_interval():
    with pytest.raises(ValueError):
        ArmModel(Bernoulli(), 0.5, ParamSpace(0.0, 1.0))


def test_param_space_needs_ordered_finite_bounds():
    with pytest.raises(ValueError):
        ParamSpace(1.0, 1.0)
    with pytest.raises(ValueError):
        ParamSpace(0.0, math.inf)
    assert ParamSpace(0.0, 0.3).closest_to(0.5) == 0.3


def test_instance_helpers():
    instance = gaussian_instance([0.0, 0.7, 0.7], [1.0, 2.0, 0.5])
    assert instance.K == 3
    assert instance.best_arm == 1
    assert instance.gaps == pytest.approx((0.7, 0.0, 0.0))
    assert instance.sigmas == pytest.approx((1.0, 2.0, 0.5))

    with pytest.raises(ValueError):
        gaussian_instance([1.0], [1.0])
    with pytest.raises(ValueError):
        gaussian_instance([1.0, 0.0], [1.0])


def test_sup_variance_uses_point_closest_to_half():
    assert sup_variance(Bernoulli(), None) == pytest.approx(0.25)
    assert sup_variance(Bernoulli(), ParamSpace(0.6, 0.9)) == pytest.approx(0.24)
    assert sup_variance(GaussianKnownVar(2.5), None) == 2.5


def test_kl_gaussian_closed_form_and_zero_on_diagonal():
    p = ArmModel(GaussianKnownVar(2.0), 1.0)
    q = ArmModel(GaussianKnownVar(2.0), 0.0)
    assert kl(p, q) == pytest.approx(0.25)
    assert kl(p, p) == 0.0


def test_kl_bernoulli_is_nonnegative_and_asymmetric():
    p = ArmModel(Bernoulli(), 0.2)
    q = ArmModel(Bernoulli(), 0.6)
    assert kl(p, q) > 0
    assert kl(q, p) > 0
    assert kl(p, q) != pytest.approx(kl(q, p))
    assert kl(p, p) == pytest.approx(0.0, abs=1e-15)


def test_kl_rejects_mixed_families():
    with pytest.raises(FamilyMismatchError):
        kl(ArmModel(Bernoulli(), 0.5), ArmModel(GaussianKnownVar(1.0), 0.5))
    with pytest.raises(FamilyMismatchError):
        kl(ArmModel(GaussianKnownVar(1.0), 0.0), ArmModel(GaussianKnownVar(2.0), 0.0))


def test_fisher_quadratic_limit_for_both_families():
    arms = [
        ArmModel(Bernoulli(), 0.5),
        ArmModel(Bernoulli(), 0.3),
        ArmModel(Bernoulli(), 0.7),
        ArmModel(GaussianKnownVar(1.0), 0.0),
    ]
    for arm in arms:
        rows = fisher_approximation_rows(arm, [1e-2, 1e-3, 1e-4])
        assert [row["eps"] for row in rows] == [1e-2, 1e-3, 1e-4]
        for row in rows:
            assert row["fisher_half"] == pytest.approx(fisher_info(arm) / 2)
            assert row["rel_err"] <= 5 * row["eps"]


def test_fisher_rows_keep_the_arm_parameter_space():
    arm = ArmModel(Bernoulli(), 0.97, ParamSpace(0.01, 0.99))
    rows = fisher_approximation_rows(arm, [1e-2, 1e-3])
    assert [row["mean"] for row in rows] == [0.97, 0.97]
    with pytest.raises(ValueError, match="outside parameter space"):
        fisher_approximation_rows(ArmModel(Bernoulli(), 0.95), [1e-2])


def test_gaussian_fisher_ratio_is_exact():
    rows = fisher_approximation_rows(ArmModel(GaussianKnownVar(1.0), 0.0), [1e-3])
    assert rows[0]["ratio"] == pytest.approx(0.5, rel=1e-9)


def test_sample_is_deterministic_for_a_seed():
    arm = ArmModel(GaussianKnownVar(1.0), 0.0)
    first = [sample(arm, np.random.default_rng(5)) for _ in range(3)]
    second = [sample(arm, np.random.default_rng(5)) for _ in range(3)]
    assert first == second
    draws = sample(ArmModel(Bernoulli(), 0.4), np.random.default_rng(5), size=50)
    assert set(np.unique(draws)) <= {0.0, 1.0}


@pytest.mark.parametrize(
    "arm",
    [ArmModel(Bernoulli(), 0.5), ArmModel(Bernoulli(), 0.2), ArmModel(GaussianKnownVar(4.0), 1.0)],
)
def test_sample_matches_mean_and_variance(arm):
    n = 1_000_000
    draws = sample(arm, np.random.default_rng(17), size=n)
    var = variance(arm)
    assert abs(draws.mean() - arm.mean) <= 4 * math.sqrt(var / n)
    # var of the sample variance is (mu4 - var^2) / n; mu4 = 3 var^2 for Gaussian.
    # The second band term covers the squared error of the sample mean.
    if isinstance(arm.family, Bernoulli):
        mu4 = var * (1 - 3 * var)
    else:
        mu4 = 3 * var**2
    assert abs(draws.var(ddof=1) - var) <= 4 * math.sqrt((mu4 - var**2) / n) + 16 * var / n


def test_bernoulli_half_sample_mean_is_tight():
    draws = sample(ArmModel(Bernoulli(), 0.5), np.random.default_rng(23), size=1_000_000)
    assert abs(draws.mean() - 0.5) <= 0.002


def test_bernoulli_fisher_information_matches_finite_difference():
    # I(mu) = -E[d^2/dmu^2 log p(X; mu)], by central differences of the expected log-likelihood
    mu, h = 0.3, 1e-4

    def expected_loglik(theta):
        return mu * math.log(theta) + (1 - mu) * math.log(1 - theta)

    second = (expected_loglik(mu + h) - 2 * expected_loglik(mu) + expected_loglik(mu - h)) / h**2
    assert -second == pytest.approx(fisher_info(ArmModel(Bernoulli(), mu)), rel=1e-5)


def test_draw_stats_edge_counts(rng):
    arm = ArmModel(GaussianKnownVar(1.0), 2.0)
    assert draw_stats(arm, 0, rng) == ArmStats()
    single = draw_stats(arm, 1, rng)
    assert single.count == 1 and single.m2 == 0.0
    with pytest.raises(ValueError):
        draw_stats(arm, -1, rng)


def test_bernoulli_draw_stats_matches_folded_samples():
    arm = ArmModel(Bernoulli(), 0.3)
    stats = draw_stats(arm, 40, np.random.default_rng(1))
    successes = round(stats.mean * 40)
    folded = ArmStats.from_samples([1.0] * successes + [0.0] * (40 - successes))
    assert stats.mean == pytest.approx(folded.mean)
    assert stats.m2 == pytest.approx(folded.m2)


def test_gaussian_draw_stats_have_the_sampling_law():
    arm = ArmModel(GaussianKnownVar(4.0), 1.0)
    rng = np.random.default_rng(99)
    n = 10
    draws = [draw_stats(arm, n, rng) for _ in range(4000)]
    means = np.array([d.mean for d in draws])
    variances = np.array([variance_hat(d) for d in draws])

    # sample mean ~ N(1, 4/10); unbiased variance has mean 4 and var 2*16/9
    assert abs(means.mean() - 1.0) < 4 * math.sqrt(0.4 / 4000)
    assert abs(variances.mean() - 4.0) < 4 * math.sqrt(32 / 9 / 4000)
    assert scipy_stats.kstest(means, "norm", args=(1.0, math.sqrt(0.4))).pvalue > 1e-4


def test_bernoulli_draw_stats_success_counts_are_binomial():
    arm = ArmModel(Bernoulli(), 0.5)
    rng = np.random.default_rng(3)
    n = 4
    successes = np.array([round(draw_stats(arm, n, rng).mean * n) for _ in range(8000)])
    observed = np.bincount(successes, minlength=n + 1)
    expected = scipy_stats.binom.pmf(np.arange(n + 1), n, 0.5) * len(successes)
    assert scipy_stats.chisquare(observed, expected).pvalue > 1e-4
