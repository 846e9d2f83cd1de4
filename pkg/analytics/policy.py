"""
Two-stage allocation with empirical-best-arm choice (TS-EBA), plus baseline designs.

Stage 1 pulls every arm rT/K times, builds shared confidence bands and keeps the
arms whose upper bound reaches the best lower bound. If a single arm survives it is
returned at once. Otherwise Stage 2 draws the remaining (1 - r)T arms i.i.d. from a
multinomial over the survivors whose weights come from the estimated standard
deviations (two survivors) or variances (three or more), minus the share already
spent in Stage 1. The recommendation is the arm with the largest final sample mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from analytics.estimators import ArmStats, ConfBounds, conf_bounds, merge, variance_hat
from analytics.model import BanditInstance, draw_stats

_INTEGRALITY_TOL = 1e-9


class Variant(str, Enum):
    VARIANCE_BASED = "variance_based"
    UNIFORM_ON_CANDIDATES = "uniform_on_candidates"


class Phase(str, Enum):
    STAGE1 = "stage1"
    STAGE2 = "stage2"
    DONE = "done"


class BaselineKind(str, Enum):
    UNIFORM_EBA = "uniform_eba"
    ORACLE_NEYMAN_EBA = "oracle_neyman_eba"


@dataclass(frozen=True)
class TsEbaConfig:
    T: int
    r: float
    K: int
    variant: Variant = Variant.VARIANCE_BASED
    radius_mult: float = 1.0

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 2:
            raise ValueError(f"K must be an integer >= 2, got {self.K}")
        if int(self.T) != self.T or self.T < 2:
            raise ValueError(f"T must be an integer >= 2, got {self.T}")
        if not 0 < self.r < 1:
            raise ValueError(f"split ratio r must lie in (0, 1), got {self.r}")
        if not (math.isfinite(self.radius_mult) and self.radius_mult > 0):
            raise ValueError(f"radius_mult must be positive, got {self.radius_mult}")
        object.__setattr__(self, "variant", Variant(self.variant))

        per_arm = self.r * self.T / self.K
        if abs(per_arm - round(per_arm)) > _INTEGRALITY_TOL:
            raise ValueError(
                f"two-stage allocation requires r*T/K to be an integer; "
                f"got r*T/K = {self.r}*{self.T}/{self.K} = {per_arm:.6g}"
            )
        if round(per_arm) < 2:
            raise ValueError(
                f"first stage needs at least 2 pulls per arm (T >= 2K/r); got r*T/K = {per_arm:.6g}"
            )

    @property
    def first_stage_per_arm(self) -> int:
        return int(round(self.r * self.T / self.K))

    @property
    def first_stage_budget(self) -> int:
        return self.first_stage_per_arm * self.K

    @property
    def second_stage_budget(self) -> int:
        return self.T - self.first_stage_budget


@dataclass
class PolicyState:
    phase: Phase
    stats: list[ArmStats]
    bounds: ConfBounds | None = None
    candidates: frozenset[int] = frozenset()
    probs: tuple[float, ...] | None = None
    early_winner: int | None = None
    stage2_counts: tuple[int, ...] | None = None


@dataclass(frozen=True)
class RunResult:
    chosen: int
    counts: tuple[int, ...]
    regret: float
    misidentified: bool
    candidate_size: int
    stage2_counts: tuple[int, ...] = field(default=())
    early_stopped: bool = False


def candidate_set(bounds: ConfBounds) -> frozenset[int]:
    best_lower = max(bounds.lower)
    return frozenset(a for a, upper in enumerate(bounds.upper) if upper >= best_lower)


def ideal_ratio(sigmas: Sequence[float], set_size: int) -> tuple[float, ...]:
    """
    Target allocation among surviving arms.

    Two survivors: proportional to standard deviations (Neyman).
    Three or more: proportional to variances.
    """
    if set_size < 2:
        raise ValueError("ideal ratio needs at least 2 candidate arms; take the early-stop path")
    if len(sigmas) != set_size:
        raise ValueError(f"expected {set_size} standard deviations, got {len(sigmas)}")
    if any(sigma < 0 or not math.isfinite(sigma) for sigma in sigmas):
        raise ValueError("standard deviations must be finite and non-negative")

    weights = list(sigmas) if set_size == 2 else [sigma * sigma for sigma in sigmas]
    total = math.fsum(weights)
    if total <= 0:
        # every survivor produced constant outcomes
        return tuple(1.0 / set_size for _ in weights)
    return tuple(weight / total for weight in weights)


def stage2_probs(w: Sequence[float], r: float, K: int) -> tuple[float, ...]:
    """Subtract the r/K share each arm already got in Stage 1, clip at 0, renormalise."""
    spent = r / K
    clipped = [max(weight - spent, 0.0) for weight in w]
    total = math.fsum(clipped)
    if total <= 0:
        return tuple(1.0 / len(w) for _ in w)
    return tuple(value / total for value in clipped)


def side_conditions_ok(r: float, K: int, sigmas: Sequence[float]) -> bool:
    """Worst-case guarantee condition on the split ratio."""
    if K == 2:
        total = math.fsum(sigmas)
        return r / K <= min(sigmas) / total
    total = math.fsum(sigma * sigma for sigma in sigmas)
    return r / K <= min(sigma * sigma for sigma in sigmas) / total


def bayes_side_condition_ok(r: float, K: int, sigmas: Sequence[float]) -> bool:
    """Average-case guarantee condition: r/K <= min over a != b of sigma_a / (sigma_a + sigma_b)."""
    worst = min(
        sigmas[a] / (sigmas[a] + sigmas[b])
        for a in range(len(sigmas))
        for b in range(len(sigmas))
        if a != b
    )
    return r / K <= worst


def eba_choice(stats: Sequence[ArmStats]) -> int:
    """Index of the largest sample mean, lowest index on ties. Unpulled arms never win."""
    if all(arm.count == 0 for arm in stats):
        raise ValueError("no arm has been pulled")
    means = np.array([arm.mean if arm.count else -np.inf for arm in stats])
    return int(np.argmax(means))


def _finish(
    instance: BanditInstance,
    stats: Sequence[ArmStats],
    chosen: int,
    candidate_size: int,
    stage2_counts: tuple[int, ...],
    early_stopped: bool,
) -> RunResult:
    means = instance.means
    best = max(means)
    return RunResult(
        chosen=chosen,
        counts=tuple(arm.count for arm in stats),
        regret=best - means[chosen],
        misidentified=means[chosen] < best,
        candidate_size=candidate_size,
        stage2_counts=stage2_counts,
        early_stopped=early_stopped,
    )


class TsEbaExperiment:
    """One replication of the two-stage design, advanced phase by phase with ``step``."""

    def __init__(self, config: TsEbaConfig, instance: BanditInstance, rng: np.random.Generator):
        if config.K != instance.K:
            raise ValueError(f"config is for K={config.K} arms, instance has {instance.K}")
        self.config = config
        self.instance = instance
        self.rng = rng
        # one outcome stream per arm, the parent stream drives allocation
        self._arm_rngs = rng.spawn(instance.K)
        self.state = PolicyState(phase=Phase.STAGE1, stats=[ArmStats()] * instance.K)

    def step(self) -> Phase:
        if self.state.phase is Phase.STAGE1:
            self._first_stage()
        elif self.state.phase is Phase.STAGE2:
            self._second_stage()
        else:
            raise RuntimeError("experiment already finished")
        return self.state.phase

    def _first_stage(self):
        config, state = self.config, self.state
        n1 = config.first_stage_per_arm
        state.stats = [
            draw_stats(arm, n1, arm_rng) for arm, arm_rng in zip(self.instance.arms, self._arm_rngs)
        ]
        state.bounds = conf_bounds(state.stats, config.T, config.r, config.K, config.radius_mult)
        state.candidates = candidate_set(state.bounds)

        if len(state.candidates) == 1:
            (state.early_winner,) = state.candidates
            state.phase = Phase.DONE
            return

        ordered = sorted(state.candidates)
        if config.variant is Variant.UNIFORM_ON_CANDIDATES:
            w = tuple(1.0 / len(ordered) for _ in ordered)
        else:
            sigmas = [math.sqrt(variance_hat(state.stats[a])) for a in ordered]
            w = ideal_ratio(sigmas, len(ordered))
        pi = stage2_probs(w, config.r, config.K)

        probs = [0.0] * config.K
        for a, p in zip(ordered, pi):
            probs[a] = p
        state.probs = tuple(probs)
        state.phase = Phase.STAGE2

    def _second_stage(self):
        state = self.state
        counts = self.rng.multinomial(self.config.second_stage_budget, state.probs)
        for a, (arm, arm_rng) in enumerate(zip(self.instance.arms, self._arm_rngs)):
            if counts[a]:
                state.stats[a] = merge(state.stats[a], draw_stats(arm, int(counts[a]), arm_rng))
        state.stage2_counts = tuple(int(n) for n in counts)
        state.phase = Phase.DONE

    def result(self) -> RunResult:
        state = self.state
        if state.phase is not Phase.DONE:
            raise RuntimeError(f"experiment not finished (phase={state.phase.value})")
        early = state.early_winner is not None
        chosen = state.early_winner if early else eba_choice(state.stats)
        return _finish(
            self.instance,
            state.stats,
            chosen,
            candidate_size=len(state.candidates),
            stage2_counts=state.stage2_counts or (0,) * self.instance.K,
            early_stopped=early,
        )


def run(config: TsEbaConfig, instance: BanditInstance, rng: np.random.Generator) -> RunResult:
    experiment = TsEbaExperiment(config, instance, rng)
    while experiment.state.phase is not Phase.DONE:
        experiment.step()
    return experiment.result()


def run_stage1(config: TsEbaConfig, instance: BanditInstance, rng: np.random.Generator):
    """Run only the pilot stage; returns ``(stats, bounds, candidates)``."""
    experiment = TsEbaExperiment(config, instance, rng)
    experiment.step()
    state = experiment.state
    return state.stats, state.bounds, state.candidates


def uniform_counts(T: int, K: int) -> list[int]:
    base, remainder = divmod(int(T), K)
    return [base + (1 if a < remainder else 0) for a in range(K)]


def neyman_counts(T: int, sigmas: Sequence[float]) -> list[int]:
    """Counts proportional to standard deviations, remainder to the largest fractions."""
    total = math.fsum(sigmas)
    raw = [T * sigma / total for sigma in sigmas]
    counts = [math.floor(value) for value in raw]
    remainder = int(T) - sum(counts)
    order = sorted(range(len(raw)), key=lambda a: (-(raw[a] - counts[a]), a))
    for a in order[:remainder]:
        counts[a] += 1
    return counts


def run_baseline(
    kind: BaselineKind,
    instance: BanditInstance,
    T: int,
    rng: np.random.Generator,
) -> RunResult:
    kind = BaselineKind(kind)
    if kind is BaselineKind.UNIFORM_EBA:
        counts = uniform_counts(T, instance.K)
    else:
        counts = neyman_counts(T, instance.sigmas)

    arm_rngs = rng.spawn(instance.K)
    stats = [
        draw_stats(arm, n, arm_rng) for arm, n, arm_rng in zip(instance.arms, counts, arm_rngs)
    ]
    return _finish(
        instance,
        stats,
        eba_choice(stats),
        candidate_size=instance.K,
        stage2_counts=(0,) * instance.K,
        early_stopped=False,
    )
