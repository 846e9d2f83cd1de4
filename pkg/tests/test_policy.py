import math

import numpy as np
import pytest

from analytics.estimators import ArmStats, ConfBounds
from analytics.model import gaussian_instance
from analytics.policy import (
    BaselineKind,
    Phase,
    TsEbaConfig,
    TsEbaExperiment,
    Variant,
    bayes_side_condition_ok,
    candidate_set,
    eba_choice,
    ideal_ratio,
    neyman_counts,
    run,
    run_baseline,
    run_stage1,
    side_conditions_ok,
    stage2_probs,
    uniform_counts,
)


def test_config_budget_split():
    config = TsEbaConfig(T=2000, r=0.2, K=2)
    assert config.first_stage_per_arm == 200
    assert config.first_stage_budget == 400
    assert config.second_stage_budget == 1600
    assert config.variant is Variant.VARIANCE_BASED


def test_config_requires_integer_first_stage_pulls():
    with pytest.raises(ValueError, match="integer"):
        TsEbaConfig(T=1000, r=0.25, K=3)


def test_config_rejects_out_of_range_values():
    with pytest.raises(ValueError):
        TsEbaConfig(T=1000, r=1.0, K=2)
    with pytest.raises(ValueError):
        TsEbaConfig(T=1000, r=0.2, K=1)
    with pytest.raises(ValueError):
        TsEbaConfig(T=1000, r=0.2, K=2, radius_mult=0.0)
    with pytest.raises(ValueError, match="at least 2 pulls"):
        TsEbaConfig(T=10, r=0.2, K=2)


def test_candidate_set_keeps_arms_reaching_best_lower_bound():
    bounds = ConfBounds(lower=(0.9, 0.4, -0.2), upper=(1.1, 0.6, 0.0), radius=0.1)
    assert candidate_set(bounds) == frozenset({0})
    touching = ConfBounds(lower=(0.9, 0.7), upper=(1.1, 0.9), radius=0.1)
    assert candidate_set(touching) == frozenset({0, 1})


def test_candidate_set_always_contains_empirical_best(rng):
    for _ in range(1000):
        K = int(rng.integers(2, 7))
        means = rng.normal(size=K)
        radius = float(rng.uniform(0.0, 1.0))
        bounds = ConfBounds(
            lower=tuple(means - radius), upper=tuple(means + radius), radius=radius
        )
        candidates = candidate_set(bounds)
        assert int(np.argmax(means)) in candidates
        assert 1 <= len(candidates) <= K


def test_ideal_ratio_neyman_for_two_and_variance_for_more():
    assert ideal_ratio([1.0, 3.0], 2) == pytest.approx((0.25, 0.75))
    assert ideal_ratio([1.0, 1.0, 2.0], 3) == pytest.approx((1 / 6, 1 / 6, 4 / 6))
    assert ideal_ratio([0.0, 0.0], 2) == pytest.approx((0.5, 0.5))


def test_ideal_ratio_rejects_singletons_and_mismatched_lengths():
    with pytest.raises(ValueError):
        ideal_ratio([1.0], 1)
    with pytest.raises(ValueError):
        ideal_ratio([1.0, 2.0], 3)


def test_stage2_probs_clip_and_renormalise():
    probs = stage2_probs((1 / 3, 2 / 3), 0.4, 2)
    assert probs == pytest.approx((2 / 9, 7 / 9))
    assert sum(probs) == pytest.approx(1.0)

    # an arm already over-served in Stage 1 gets nothing in Stage 2
    assert stage2_probs((0.05, 0.95), 0.4, 2) == pytest.approx((0.0, 1.0))
    # every target below the Stage-1 share: uniform fallback
    assert stage2_probs((0.1, 0.1, 0.1), 0.9, 3) == pytest.approx((1 / 3, 1 / 3, 1 / 3))


def test_side_conditions():
    assert side_conditions_ok(0.2, 2, [1.0, 1.0])
    assert not side_conditions_ok(0.9, 2, [0.1, 1.0])
    assert side_conditions_ok(0.3, 3, [1.0, 1.0, 1.0])
    assert not side_conditions_ok(0.9, 3, [1.0, 1.0, 3.0])
    assert bayes_side_condition_ok(0.1, 2, [1.0, 1.0])
    assert not bayes_side_condition_ok(0.5, 2, [0.1, 1.0])


def test_uniform_variant_spreads_stage2_evenly_over_candidates():
    instance = gaussian_instance([0.0, 0.0, 0.0], [1.0, 2.0, 0.5])
    config = TsEbaConfig(T=3000, r=0.2, K=3, variant=Variant.UNIFORM_ON_CANDIDATES)
    experiment = TsEbaExperiment(config, instance, np.random.default_rng(8))
    assert experiment.step() is Phase.STAGE2
    candidates = sorted(experiment.state.candidates)
    expected = stage2_probs([1.0 / len(candidates)] * len(candidates), 0.2, 3)
    probs = experiment.state.probs
    assert [probs[a] for a in candidates] == pytest.approx(list(expected))
    assert all(probs[a] == 0.0 for a in range(3) if a not in candidates)

    weighted = TsEbaExperiment(TsEbaConfig(T=3000, r=0.2, K=3), instance, np.random.default_rng(8))
    weighted.step()
    if len(weighted.state.candidates) == 3:
        assert weighted.state.probs[1] > weighted.state.probs[0] > weighted.state.probs[2]


def test_eba_choice_ties_and_unpulled_arms():
    tied = [ArmStats(count=3, mean=1.0), ArmStats(count=5, mean=1.0)]
    assert eba_choice(tied) == 0
    unpulled = [ArmStats(), ArmStats(count=2, mean=-3.0)]
    assert eba_choice(unpulled) == 1
    with pytest.raises(ValueError):
        eba_choice([ArmStats(), ArmStats()])


def test_experiment_state_machine_phases(two_arm_instance):
    config = TsEbaConfig(T=2000, r=0.2, K=2)
    experiment = TsEbaExperiment(config, two_arm_instance, np.random.default_rng(0))
    assert experiment.state.phase is Phase.STAGE1
    with pytest.raises(RuntimeError):
        experiment.result()

    phase = experiment.step()
    assert experiment.state.bounds is not None
    assert all(stat.count == 200 for stat in experiment.state.stats)
    if phase is Phase.STAGE2:
        assert sum(experiment.state.probs) == pytest.approx(1.0)
        assert experiment.step() is Phase.DONE
    assert experiment.state.phase is Phase.DONE
    with pytest.raises(RuntimeError):
        experiment.step()
    assert experiment.result().chosen in (0, 1)


def test_budget_accounting_on_random_instances(rng):
    for case in range(1000):
        K = int(rng.integers(2, 6))
        per_arm = int(rng.integers(2, 30))
        T = K * per_arm * 5
        config = TsEbaConfig(
            T=T,
            r=0.2,
            K=K,
            variant=Variant.VARIANCE_BASED if case % 2 else Variant.UNIFORM_ON_CANDIDATES,
        )
        instance = gaussian_instance(rng.normal(size=K) * 0.3, rng.uniform(0.2, 2.0, size=K))
        result = run(config, instance, np.random.default_rng(case))

        assert all(count >= per_arm for count in result.counts)
        if result.early_stopped:
            assert sum(result.counts) == config.first_stage_budget
            assert result.candidate_size == 1
        else:
            assert sum(result.counts) == T
            assert sum(result.stage2_counts) == config.second_stage_budget
        assert result.regret >= 0
        assert result.misidentified == (result.regret > 0)


def test_stage2_only_pulls_candidates(rng):
    instance = gaussian_instance([0.0, 0.05, 3.0, -3.0], [1.0, 1.0, 1.0, 1.0])
    config = TsEbaConfig(T=4000, r=0.2, K=4)
    for seed in range(50):
        experiment = TsEbaExperiment(config, instance, np.random.default_rng(seed))
        experiment.step()
        if experiment.state.phase is Phase.DONE:
            continue
        candidates = experiment.state.candidates
        experiment.step()
        for arm, pulls in enumerate(experiment.state.stage2_counts):
            if arm not in candidates:
                assert pulls == 0


def test_clear_winner_stops_after_stage_one():
    instance = gaussian_instance([5.0, 0.0], [1.0, 1.0])
    result = run(TsEbaConfig(T=2000, r=0.2, K=2), instance, np.random.default_rng(1))
    assert result.early_stopped
    assert result.chosen == 0
    assert result.counts == (200, 200)
    assert result.stage2_counts == (0, 0)


def test_run_is_reproducible_for_a_seed(two_arm_instance):
    config = TsEbaConfig(T=2000, r=0.2, K=2)
    first = run(config, two_arm_instance, np.random.default_rng(42))
    second = run(config, two_arm_instance, np.random.default_rng(42))
    assert first == second


def test_run_stage1_returns_pilot_outputs(two_arm_instance):
    stats, bounds, candidates = run_stage1(
        TsEbaConfig(T=2000, r=0.2, K=2), two_arm_instance, np.random.default_rng(3)
    )
    assert [s.count for s in stats] == [200, 200]
    assert bounds.K == 2
    assert candidates <= {0, 1}


def test_baseline_counts():
    assert uniform_counts(10, 3) == [4, 3, 3]
    counts = neyman_counts(10, [1.0, 2.0])
    assert counts == [3, 7]
    assert sum(neyman_counts(1001, [1.0, 1.5, 0.3])) == 1001


def test_baselines_spend_full_budget(two_arm_instance):
    for kind in BaselineKind:
        result = run_baseline(kind, two_arm_instance, 1001, np.random.default_rng(0))
        assert sum(result.counts) == 1001
        assert not result.early_stopped
        assert result.candidate_size == 2


def test_mismatched_config_and_instance(two_arm_instance):
    with pytest.raises(ValueError):
        TsEbaExperiment(TsEbaConfig(T=3000, r=0.2, K=3), two_arm_instance, np.random.default_rng())


def test_neyman_counts_follow_sigma_ratio():
    counts = neyman_counts(3000, [1.0, 2.0])
    assert counts[1] / counts[0] == pytest.approx(2.0)
    assert math.isclose(sum(counts), 3000)
