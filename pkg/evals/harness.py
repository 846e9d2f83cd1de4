"""
Monte Carlo engine for fixed-budget best-arm identification designs.

Replication ``i`` of a plan is seeded from ``(base_seed, i)`` only, replications run
in contiguous chunks on a process pool, and chunk outputs are concatenated in
replication order before any floating-point reduction (``math.fsum``). Aggregates
are therefore bit-identical for any worker count.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from analytics.bounds import PriorSpec, minimax_constant
from analytics.model import (
    ArmModel,
    BanditInstance,
    Bernoulli,
    Family,
    ParamSpace,
    bernoulli_instance,
    gaussian_instance,
    sup_variance,
)
from analytics.policy import (
    BaselineKind,
    RunResult,
    TsEbaConfig,
    run,
    run_baseline,
    run_stage1,
    side_conditions_ok,
)
from analytics.utils import (
    chunk_ranges,
    fsum_mean,
    prior_rng,
    replication_rng,
    standard_error,
)

logger = logging.getLogger(__name__)

FREQ_TOLERANCE = 1e-9


class PolicyKind(str, Enum):
    TS_EBA = "ts_eba"
    UNIFORM_EBA = "uniform_eba"
    ORACLE_NEYMAN_EBA = "oracle_neyman_eba"


@dataclass(frozen=True)
class PolicySpec:
    kind: PolicyKind
    T: int
    config: TsEbaConfig | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        if self.kind is PolicyKind.TS_EBA:
            if self.config is None:
                raise ValueError("TS-EBA policy needs a TsEbaConfig")
            if self.config.T != self.T:
                raise ValueError(
                    f"policy budget {self.T} differs from config budget {self.config.T}"
                )
        elif self.T < 1:
            raise ValueError("T must be >= 1")

    @classmethod
    def ts_eba(cls, config: TsEbaConfig) -> "PolicySpec":
        return cls(PolicyKind.TS_EBA, config.T, config)

    @classmethod
    def baseline(cls, kind, T: int) -> "PolicySpec":
        return cls(PolicyKind(BaselineKind(kind).value), int(T))

    def run(self, instance: BanditInstance, rng: np.random.Generator) -> RunResult:
        if self.kind is PolicyKind.TS_EBA:
            return run(self.config, instance, rng)
        return run_baseline(BaselineKind(self.kind.value), instance, self.T, rng)


@dataclass(frozen=True)
class SimPlan:
    policy: PolicySpec
    instance: BanditInstance
    reps: int
    base_seed: int = 0
    # replication i of this plan uses seed index first_index + i
    first_index: int = 0

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.base_seed < 0 or self.base_seed >= 2**64:
            raise ValueError("base_seed must be a 64-bit unsigned integer")
        if self.policy.config is not None and self.policy.config.K != self.instance.K:
            raise ValueError(
                f"policy is configured for K={self.policy.config.K}, instance has {self.instance.K}"
            )


@dataclass
class ReplicationBatch:
    """Per-replication outcomes stored column-wise, in replication order."""

    regret: np.ndarray
    misidentified: np.ndarray
    chosen: np.ndarray
    counts: np.ndarray
    stage2_counts: np.ndarray
    early_stopped: np.ndarray
    candidate_size: np.ndarray

    @classmethod
    def from_results(cls, results: Sequence[RunResult], K: int) -> "ReplicationBatch":
        return cls(
            regret=np.array([res.regret for res in results], dtype=float),
            misidentified=np.array([res.misidentified for res in results], dtype=bool),
            chosen=np.array([res.chosen for res in results], dtype=np.int64),
            counts=np.array([res.counts for res in results], dtype=np.int64).reshape(-1, K),
            stage2_counts=np.array([res.stage2_counts for res in results], dtype=np.int64).reshape(
                -1, K
            ),
            early_stopped=np.array([res.early_stopped for res in results], dtype=bool),
            candidate_size=np.array([res.candidate_size for res in results], dtype=np.int64),
        )

    @classmethod
    def concat(cls, batches: Sequence["ReplicationBatch"]) -> "ReplicationBatch":
        return cls(
            **{
                name: np.concatenate([getattr(batch, name) for batch in batches])
                for name in cls.__dataclass_fields__
            }
        )

    def __len__(self):
        return len(self.regret)


@dataclass(frozen=True)
class AggregateStats:
    T: int
    reps: int
    mean_regret: float
    regret_se: float
    misid_rate: float
    misid_se: float
    scaled_regret: float
    mean_counts: tuple[float, ...]
    early_stop_rate: float
    choice_freq: tuple[float, ...]
    stage2_share: tuple[float, ...]

    @property
    def scaled_regret_se(self) -> float:
        return math.sqrt(self.T) * self.regret_se


@dataclass(frozen=True)
class ScanReport:
    grid: tuple[tuple[float, AggregateStats], ...]
    sup_scaled_regret: float
    argmax_gap: float
    bound_constant: float
    within_bound: bool
    max_scaled_se: float


@dataclass(frozen=True)
class ConcentrationReport:
    reps: int
    coverage_rate: float
    best_in_candidates_rate: float
    reference: float
    mc_sigma: float

    @property
    def threshold(self) -> float:
        return self.reference - 3.0 * self.mc_sigma


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        raw = os.getenv("BAI_WORKERS", "1")
        try:
            workers = int(raw)
        except ValueError as exc:
            raise ValueError(f"BAI_WORKERS must be an integer, got {raw!r}") from exc
    return max(1, int(workers))


def _run_chunk(plan: SimPlan, start: int, stop: int) -> ReplicationBatch:
    results = [
        plan.policy.run(plan.instance, replication_rng(plan.base_seed, plan.first_index + idx))
        for idx in range(start, stop)
    ]
    return ReplicationBatch.from_results(results, plan.instance.K)


def _execute(tasks, workers: int) -> list:
    """Run ``(fn, *args)`` tasks, returning outputs in task order."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*args) for fn, *args in tasks]
    logger.debug("dispatching %d tasks to %d workers", len(tasks), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *args) for fn, *args in tasks]
        return [future.result() for future in futures]


def _plan_tasks(plan: SimPlan, workers: int):
    return [(_run_chunk, plan, start, stop) for start, stop in chunk_ranges(plan.reps, workers)]


def _warn_side_conditions(policy: PolicySpec, instance: BanditInstance):
    if policy.config is None:
        return
    if not side_conditions_ok(policy.config.r, instance.K, instance.sigmas):
        logger.warning(
            "split ratio r=%s violates the worst-case side condition for sigmas=%s; "
            "the design still runs but the bound guarantee does not apply",
            policy.config.r,
            tuple(round(s, 6) for s in instance.sigmas),
        )


def run_replications(plan: SimPlan, workers: int | None = None) -> ReplicationBatch:
    workers = resolve_workers(workers)
    return ReplicationBatch.concat(_execute(_plan_tasks(plan, workers), workers))


def aggregate(batch: ReplicationBatch, T: int) -> AggregateStats:
    n = len(batch)
    K = batch.counts.shape[1]
    regrets = batch.regret.tolist()
    mean_regret = fsum_mean(regrets)
    misid_rate = int(batch.misidentified.sum()) / n
    misid_se = math.sqrt(misid_rate * (1.0 - misid_rate) / n) if n > 1 else 0.0

    active = ~batch.early_stopped & (batch.stage2_counts.sum(axis=1) > 0)
    if active.any():
        rows = batch.stage2_counts[active]
        shares = rows / rows.sum(axis=1, keepdims=True)
        stage2_share = tuple(fsum_mean(shares[:, a].tolist()) for a in range(K))
    else:
        stage2_share = (0.0,) * K

    return AggregateStats(
        T=int(T),
        reps=n,
        mean_regret=mean_regret,
        regret_se=standard_error(regrets, mean_regret),
        misid_rate=misid_rate,
        misid_se=misid_se,
        scaled_regret=math.sqrt(T) * mean_regret,
        mean_counts=tuple(int(total) / n for total in batch.counts.sum(axis=0)),
        early_stop_rate=int(batch.early_stopped.sum()) / n,
        choice_freq=tuple(
            int(count) / n for count in np.bincount(batch.chosen, minlength=K)[:K]
        ),
        stage2_share=stage2_share,
    )


def simulate(plan: SimPlan, workers: int | None = None) -> AggregateStats:
    _warn_side_conditions(plan.policy, plan.instance)
    return aggregate(run_replications(plan, workers), plan.policy.T)


def adversarial_instance(
    K: int,
    sigmas: Sequence[float],
    gap: float,
    family: str = "gaussian",
    space: ParamSpace | None = None,
) -> BanditInstance:
    """
    Arm 0 ahead of all others by ``gap``.

    Gaussian: means (gap, 0, ..., 0) with the given sigmas. Bernoulli: means
    0.5 + gap/2 for the best arm and 0.5 - gap/2 for the rest, so the variances
    stay near their maximum at 1/2. A ``space`` must contain every mean.
    """
    if family == "gaussian":
        return gaussian_instance([gap] + [0.0] * (K - 1), sigmas, space)
    if family == "bernoulli":
        return bernoulli_instance([0.5 + gap / 2.0] + [0.5 - gap / 2.0] * (K - 1), space)
    raise ValueError(f"unknown family {family!r}")


def worst_case_scan(
    policy: PolicySpec,
    K: int,
    sigmas: Sequence[float],
    T: int,
    gap_grid: Sequence[float],
    reps: int,
    base_seed: int = 0,
    family: str = "gaussian",
    workers: int | None = None,
    space: ParamSpace | None = None,
) -> ScanReport:
    """
    Simulate the adversarial instance at every gap and compare the largest
    sqrt(T) * regret with the minimax constant.

    All grid points share ``base_seed`` (common random numbers across gaps).
    """
    if not gap_grid:
        raise ValueError("gap grid is empty")
    if any(gap <= 0 for gap in gap_grid):
        raise ValueError("gaps must be positive")
    if policy.T != T:
        raise ValueError(f"policy budget {policy.T} differs from scan budget {T}")
    workers = resolve_workers(workers)

    if family == "bernoulli":
        bound_sigmas = [math.sqrt(sup_variance(Bernoulli(), space))] * K
    else:
        bound_sigmas = list(sigmas)
    bound = minimax_constant(K, bound_sigmas)

    instances = [adversarial_instance(K, sigmas, gap, family, space) for gap in gap_grid]
    _warn_side_conditions(policy, instances[0])
    grid = []
    for gap, instance in zip(gap_grid, instances):
        plan = SimPlan(policy, instance, reps, base_seed)
        stats = aggregate(run_replications(plan, workers), T)
        logger.info(
            "scan gap=%.6g scaled_regret=%.6g misid=%.6g",
            gap,
            stats.scaled_regret,
            stats.misid_rate,
        )
        grid.append((float(gap), stats))

    best_gap, best_stats = max(grid, key=lambda item: item[1].scaled_regret)
    max_se = max(stats.scaled_regret_se for _, stats in grid)
    sup = best_stats.scaled_regret
    return ScanReport(
        grid=tuple(grid),
        sup_scaled_regret=sup,
        argmax_gap=best_gap,
        bound_constant=bound,
        within_bound=sup <= bound + 3.0 * max_se,
        max_scaled_se=max_se,
    )


def c_grid(T: int, low: float = 0.2, high: float = 8.0, points: int = 15) -> list[float]:
    """Log-spaced gaps c / sqrt(T) for c in [low, high]."""
    return [float(c) / math.sqrt(T) for c in np.geomspace(low, high, points)]


def _prior_instance(families: Sequence[Family], prior: PriorSpec, means) -> BanditInstance:
    space = ParamSpace(prior.lo, prior.hi) if prior.hi > prior.lo else None
    arms = tuple(ArmModel(family, float(mu), space) for family, mu in zip(families, means))
    return BanditInstance(arms, space)


def bayes_eval(
    policy: PolicySpec,
    K: int,
    families: Family | Sequence[Family],
    prior: PriorSpec,
    T: int,
    prior_draws: int,
    reps_per_draw: int,
    base_seed: int = 0,
    workers: int | None = None,
) -> tuple[float, float]:
    """
    T-scaled Bayes simple regret, T * E_H[Regret], and its standard error.

    Means are drawn from the prior on a dedicated stream; draw d runs replications
    with seed indices d * reps_per_draw + i, so a point-mass prior reproduces
    ``simulate`` with ``prior_draws * reps_per_draw`` replications exactly. The
    standard error is the spread of the per-draw mean regrets, which carries both
    the between-draw and the within-draw variance.
    """
    prior.require_uniform()
    if prior_draws < 1 or reps_per_draw < 1:
        raise ValueError("prior_draws and reps_per_draw must be >= 1")
    if policy.T != T:
        raise ValueError(f"policy budget {policy.T} differs from T={T}")
    if not isinstance(families, (list, tuple)):
        families = [families] * K
    workers = resolve_workers(workers)

    draws_rng = prior_rng(base_seed)
    plans = []
    for draw in range(prior_draws):
        means = draws_rng.uniform(prior.lo, prior.hi, size=K)
        instance = _prior_instance(families, prior, means)
        plans.append(SimPlan(policy, instance, reps_per_draw, base_seed, draw * reps_per_draw))

    per_draw_chunks = max(1, workers // prior_draws) if workers > prior_draws else 1
    tasks = [task for plan in plans for task in _plan_tasks(plan, per_draw_chunks)]
    batch = ReplicationBatch.concat(_execute(tasks, workers))

    regrets = batch.regret.tolist()
    mean = fsum_mean(regrets)
    if prior_draws > 1:
        draw_means = [
            fsum_mean(regrets[d * reps_per_draw : (d + 1) * reps_per_draw])
            for d in range(prior_draws)
        ]
        se = standard_error(draw_means)
    else:
        se = standard_error(regrets, mean)
    return T * mean, T * se


def regret_decomposition_check(
    stats: AggregateStats,
    instance: BanditInstance,
    per_arm_choice_freq: Sequence[float],
) -> float:
    """|mean regret - sum_a gap_a * P(choose a)|; zero up to rounding by construction."""
    if len(per_arm_choice_freq) != instance.K:
        raise ValueError(f"expected {instance.K} frequencies, got {len(per_arm_choice_freq)}")
    if any(freq < 0 for freq in per_arm_choice_freq):
        raise ValueError("choice frequencies must be non-negative")
    if abs(math.fsum(per_arm_choice_freq) - 1.0) > FREQ_TOLERANCE:
        raise ValueError("choice frequencies must sum to 1")
    decomposed = math.fsum(gap * freq for gap, freq in zip(instance.gaps, per_arm_choice_freq))
    return abs(stats.mean_regret - decomposed)


def _concentration_chunk(config: TsEbaConfig, instance: BanditInstance, base_seed, start, stop):
    covered = 0
    best_kept = 0
    best = instance.best_arm
    for idx in range(start, stop):
        _, bounds, candidates = run_stage1(config, instance, replication_rng(base_seed, idx))
        if all(
            low <= mu <= up for low, mu, up in zip(bounds.lower, instance.means, bounds.upper)
        ):
            covered += 1
        if best in candidates:
            best_kept += 1
    return covered, best_kept


def concentration_check(
    instance: BanditInstance,
    T: int,
    r: float,
    reps: int,
    base_seed: int = 0,
    radius_mult: float = 1.0,
    workers: int | None = None,
) -> ConcentrationReport:
    """
    Frequency of the pilot-stage event that every true mean lies inside its band,
    and of the true best arm surviving elimination, against 1 - 2K/T^2.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    config = TsEbaConfig(T=T, r=r, K=instance.K, radius_mult=radius_mult)
    workers = resolve_workers(workers)
    tasks = [
        (_concentration_chunk, config, instance, base_seed, start, stop)
        for start, stop in chunk_ranges(reps, workers)
    ]
    outputs = _execute(tasks, workers)
    covered = sum(out[0] for out in outputs)
    best_kept = sum(out[1] for out in outputs)
    reference = 1.0 - 2.0 * instance.K / (T * T)
    return ConcentrationReport(
        reps=reps,
        coverage_rate=covered / reps,
        best_in_candidates_rate=best_kept / reps,
        reference=reference,
        mc_sigma=math.sqrt(reference * (1.0 - reference) / reps),
    )
