"""
Streaming per-arm sample statistics and first-stage confidence bounds.

Arm statistics are accumulated one observation at a time (Welford) or merged
batch-wise (Chan et al.), so a replication never has to keep raw outcomes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence


class InsufficientDataError(ValueError):
    """Raised when a statistic needs more observations than an arm has."""


@dataclass(frozen=True)
class ArmStats:
    """Count, running mean and sum of squared deviations for one arm."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be >= 0")
        if self.m2 < 0:
            raise ValueError("m2 must be >= 0")

    @classmethod
    def from_samples(cls, values: Iterable[float]) -> "ArmStats":
        stats = cls()
        for value in values:
            stats = update(stats, value)
        return stats


@dataclass(frozen=True)
class ConfBounds:
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    radius: float

    @property
    def K(self) -> int:
        return len(self.lower)


def update(stats: ArmStats, y: float) -> ArmStats:
    count = stats.count + 1
    delta = float(y) - stats.mean
    mean = stats.mean + delta / count
    m2 = stats.m2 + delta * (float(y) - mean)
    # rounding can push a zero-spread accumulator a hair below zero
    return ArmStats(count=count, mean=mean, m2=max(m2, 0.0))


def merge(left: ArmStats, right: ArmStats) -> ArmStats:
    """Combine two disjoint batches of observations of the same arm."""
    if left.count == 0:
        return right
    if right.count == 0:
        return left
    count = left.count + right.count
    delta = right.mean - left.mean
    mean = left.mean + delta * right.count / count
    m2 = left.m2 + right.m2 + delta * delta * left.count * right.count / count
    return ArmStats(count=count, mean=mean, m2=max(m2, 0.0))


def variance_hat(stats: ArmStats) -> float:
    """Unbiased sample variance (divisor ``count - 1``)."""
    if stats.count < 2:
        raise InsufficientDataError(
            f"variance estimate needs at least 2 observations, got {stats.count}"
        )
    return stats.m2 / (stats.count - 1)


def confidence_radius(max_sigma: float, T: int, r: float, K: int, radius_mult: float = 1.0):
    """v_rT = radius_mult * sqrt(K log T / (rT)) * max_sigma, natural log."""
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    if T < 2:
        raise ValueError("T must be >= 2")
    return radius_mult * math.sqrt(K * math.log(T) / (r * T)) * max_sigma


def conf_bounds(
    stats: Sequence[ArmStats],
    T: int,
    r: float,
    K: int,
    radius_mult: float = 1.0,
) -> ConfBounds:
    """
    Symmetric lower/upper confidence bounds shared by all arms after the pilot stage.

    The radius scales with the largest estimated standard deviation across arms,
    so every arm gets the same band width.
    """
    if len(stats) != K:
        raise ValueError(f"expected statistics for {K} arms, got {len(stats)}")
    short = [idx for idx, arm in enumerate(stats) if arm.count < 2]
    if short:
        raise InsufficientDataError(f"arms {short} have fewer than 2 observations")

    max_sigma = max(math.sqrt(variance_hat(arm)) for arm in stats)
    radius = confidence_radius(max_sigma, T, r, K, radius_mult)
    return ConfBounds(
        lower=tuple(arm.mean - radius for arm in stats),
        upper=tuple(arm.mean + radius for arm in stats),
        radius=radius,
    )
