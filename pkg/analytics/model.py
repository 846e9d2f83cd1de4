"""
Mean-parametrized outcome families for bandit arms.

Each arm is a one-parameter distribution indexed by its mean mu, with a variance
function sigma^2(mu) and Fisher information 1 / sigma^2(mu). Two families ship:
Gaussian with known variance and Bernoulli.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar, Sequence

import numpy as np

from analytics.estimators import ArmStats

DEFAULT_BERNOULLI_SPACE = (0.05, 0.95)


class FamilyMismatchError(ValueError):
    """Raised when two arms from different outcome families are compared."""


@dataclass(frozen=True)
class ParamSpace:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("parameter space bounds must be finite")
        if not self.lo < self.hi:
            raise ValueError(f"parameter space needs lo < hi, got [{self.lo}, {self.hi}]")

    def contains(self, mu: float) -> bool:
        return self.lo <= mu <= self.hi

    def closest_to(self, value: float) -> float:
        return min(max(value, self.lo), self.hi)


@dataclass(frozen=True)
class GaussianKnownVar:
    var: float
    name: ClassVar[str] = "gaussian"

    def __post_init__(self):
        if not (math.isfinite(self.var) and self.var > 0):
            raise ValueError(f"Gaussian variance must be positive and finite, got {self.var}")

    def variance_at(self, mu):
        return self.var

    def default_space(self):
        return None

    def validate_space(self, space: ParamSpace) -> None:
        return None


@dataclass(frozen=True)
class Bernoulli:
    name: ClassVar[str] = "bernoulli"

    def variance_at(self, mu):
        return mu * (1.0 - mu)

    def default_space(self):
        return ParamSpace(*DEFAULT_BERNOULLI_SPACE)

    def validate_space(self, space: ParamSpace) -> None:
        # Fisher information 1 / (mu (1 - mu)) blows up at the boundary.
        if not (0.0 < space.lo and space.hi < 1.0):
            raise ValueError(
                f"Bernoulli parameter space must lie inside (0, 1), got [{space.lo}, {space.hi}]"
            )


Family = GaussianKnownVar | Bernoulli


@dataclass(frozen=True)
class ArmModel:
    family: Family
    mean: float
    space: ParamSpace | None = None

    def __post_init__(self):
        if not math.isfinite(self.mean):
            raise ValueError(f"arm mean must be finite, got {self.mean}")
        space = self.space if self.space is not None else self.family.default_space()
        if space is not None:
            self.family.validate_space(space)
            if not space.contains(self.mean):
                raise ValueError(
                    f"{self.family.name} mean {self.mean} outside parameter space "
                    f"[{space.lo}, {space.hi}]"
                )
        object.__setattr__(self, "space", space)


@dataclass(frozen=True)
class BanditInstance:
    arms: tuple[ArmModel, ...]
    space: ParamSpace | None = None

    def __post_init__(self):
        arms = tuple(self.arms)
        if len(arms) < 2:
            raise ValueError(f"a bandit instance needs K >= 2 arms, got {len(arms)}")
        if self.space is not None:
            for arm in arms:
                arm.family.validate_space(self.space)
                if not self.space.contains(arm.mean):
                    raise ValueError(
                        f"arm mean {arm.mean} outside instance space "
                        f"[{self.space.lo}, {self.space.hi}]"
                    )
        object.__setattr__(self, "arms", arms)

    @property
    def K(self) -> int:
        return len(self.arms)

    @property
    def means(self) -> tuple[float, ...]:
        return tuple(arm.mean for arm in self.arms)

    @property
    def sigmas(self) -> tuple[float, ...]:
        return tuple(math.sqrt(variance(arm)) for arm in self.arms)

    @property
    def best_arm(self) -> int:
        """Lowest index attaining the largest mean."""
        means = self.means
        return means.index(max(means))

    @property
    def gaps(self) -> tuple[float, ...]:
        best = max(self.means)
        return tuple(best - mu for mu in self.means)


def gaussian_instance(means: Sequence[float], sigmas: Sequence[float], space=None):
    if len(means) != len(sigmas):
        raise ValueError("means and sigmas must have the same length")
    arms = tuple(
        ArmModel(GaussianKnownVar(float(sigma) ** 2), float(mu), space)
        for mu, sigma in zip(means, sigmas)
    )
    return BanditInstance(arms, space)


def bernoulli_instance(means: Sequence[float], space=None):
    arms = tuple(ArmModel(Bernoulli(), float(mu), space) for mu in means)
    return BanditInstance(arms, space)


def variance(arm: ArmModel) -> float:
    return float(arm.family.variance_at(arm.mean))


def fisher_info(arm: ArmModel) -> float:
    return 1.0 / variance(arm)


def sup_variance(family: Family, space: ParamSpace | None) -> float:
    """Largest variance the family attains over the parameter space."""
    if isinstance(family, GaussianKnownVar):
        return family.var
    space = space if space is not None else family.default_space()
    return float(family.variance_at(space.closest_to(0.5)))


def sample(arm: ArmModel, rng: np.random.Generator, size: int | None = None):
    """One outcome as a float, or an array of ``size`` outcomes."""
    if isinstance(arm.family, Bernoulli):
        if size is None:
            return float(rng.random() < arm.mean)
        return (rng.random(size) < arm.mean).astype(float)
    if size is None:
        return arm.mean + math.sqrt(arm.family.var) * float(rng.standard_normal())
    return arm.mean + math.sqrt(arm.family.var) * rng.standard_normal(size)


def draw_stats(arm: ArmModel, n: int, rng: np.random.Generator) -> ArmStats:
    """
    Statistics of ``n`` fresh outcomes, generated from their sufficient statistics.

    Bernoulli: successes ~ Binomial(n, mu). Gaussian: the sample mean and the sum of
    squared deviations are independent, N(mu, var / n) and var * chi2(n - 1).
    The result has the same law as folding ``n`` draws of ``sample`` through ``update``.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return ArmStats()
    if isinstance(arm.family, Bernoulli):
        successes = int(rng.binomial(n, arm.mean))
        return ArmStats(
            count=n,
            mean=successes / n,
            m2=successes * (n - successes) / n,
        )
    var = arm.family.var
    mean = float(rng.normal(arm.mean, math.sqrt(var / n)))
    m2 = var * float(rng.chisquare(n - 1)) if n > 1 else 0.0
    return ArmStats(count=n, mean=mean, m2=m2)


def kl(p: ArmModel, q: ArmModel) -> float:
    """KL(P || Q) for two arms of the same family."""
    if type(p.family) is not type(q.family):
        raise FamilyMismatchError(
            f"cannot compare {p.family.name} arm with {q.family.name} arm"
        )
    if isinstance(p.family, GaussianKnownVar):
        if p.family.var != q.family.var:
            raise FamilyMismatchError("Gaussian KL here requires a shared known variance")
        return (p.mean - q.mean) ** 2 / (2.0 * p.family.var)
    mp, mq = p.mean, q.mean
    return mp * math.log(mp / mq) + (1.0 - mp) * math.log((1.0 - mp) / (1.0 - mq))


def fisher_approximation_rows(arm: ArmModel, epsilons: Sequence[float]) -> list[dict]:
    """
    Compare KL(mu, mu + eps) / eps^2 against I(mu) / 2 for shrinking eps.

    Used as a numeric check that the quadratic approximation of the KL divergence
    by the Fisher information holds for the arm's family.
    """
    half_info = fisher_info(arm) / 2.0
    rows = []
    for eps in epsilons:
        shifted = ArmModel(arm.family, arm.mean + eps, arm.space)
        divergence = kl(arm, shifted)
        ratio = divergence / (eps * eps)
        rows.append(
            {
                "family": arm.family.name,
                "mean": arm.mean,
                "eps": eps,
                "kl": divergence,
                "ratio": ratio,
                "fisher_half": half_info,
                "rel_err": abs(ratio - half_info) / half_info,
            }
        )
    return rows
