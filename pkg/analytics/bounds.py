"""
Closed-form constants of the minimax and Bayes regret bounds, worst-case gaps,
and normal-approximation oracles for misidentification.

The minimax constants are evaluated at caller-supplied standard deviations; taking
the sup over the parameter space is the caller's job (see ``model.sup_variance``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import norm

from analytics.model import Family
from analytics.policy import side_conditions_ok

MIN_BAYES_DRAWS = 10_000


class UnsupportedPriorError(ValueError):
    """Raised for priors other than an independent uniform product."""


class Regime(str, Enum):
    TWO_ARM = "two_arm"
    MULTI_ARM = "multi_arm"


@dataclass(frozen=True)
class PriorSpec:
    """Independent prior on every arm mean; only ``kind="uniform"`` is supported."""

    lo: float
    hi: float
    kind: str = "uniform"

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo > self.hi:
            raise ValueError(f"prior needs finite lo <= hi, got [{self.lo}, {self.hi}]")

    def require_uniform(self):
        if self.kind != "uniform":
            raise UnsupportedPriorError(
                f"only independent uniform priors are supported, got {self.kind!r}"
            )


@dataclass(frozen=True)
class BoundReport:
    minimax_constant: float
    worst_gap: float
    regime: Regime
    side_condition_ok: bool


@dataclass(frozen=True)
class BayesBoundReport:
    lower_constant: float
    upper_constant: float
    mc_sigma: float
    prefactor: float
    draws: int


@dataclass(frozen=True)
class MisidOracle:
    probability: float
    envelope: float
    z: float
    asymptotic_variance: float


def _validate(K: int, sigmas: Sequence[float]):
    if K < 2:
        raise ValueError(f"bounds need K >= 2 arms, got {K}")
    if len(sigmas) != K:
        raise ValueError(f"expected {K} standard deviations, got {len(sigmas)}")
    if any(not (math.isfinite(sigma) and sigma > 0) for sigma in sigmas):
        raise ValueError("standard deviations must be positive and finite")


def minimax_constant(K: int, sigmas: Sequence[float]) -> float:
    """
    limsup of sqrt(T) * worst-case simple regret.

    K = 2: (sigma_1 + sigma_2) / sqrt(e).
    K >= 3: 2 (1 + (K - 1) / K) sqrt(sum_a sigma_a^2 * log K).
    """
    _validate(K, sigmas)
    if K == 2:
        return (sigmas[0] + sigmas[1]) / math.sqrt(math.e)
    total_var = math.fsum(sigma * sigma for sigma in sigmas)
    return 2.0 * (1.0 + (K - 1) / K) * math.sqrt(total_var * math.log(K))


def worst_gap(K: int, sigmas: Sequence[float], T: int) -> float:
    """
    Gap at which the worst case is attained at budget T.

    K = 2: (sigma_1 + sigma_2) / sqrt(T).
    K >= 3: sqrt(2 V log K / T) with V = 2 sum_c sigma_c^2.
    """
    _validate(K, sigmas)
    if T < 1:
        raise ValueError("T must be >= 1")
    if K == 2:
        return (sigmas[0] + sigmas[1]) / math.sqrt(T)
    v = 2.0 * math.fsum(sigma * sigma for sigma in sigmas)
    return math.sqrt(2.0 * v * math.log(K) / T)


def minimax_report(K: int, sigmas: Sequence[float], T: int, r: float) -> BoundReport:
    return BoundReport(
        minimax_constant=minimax_constant(K, sigmas),
        worst_gap=worst_gap(K, sigmas, T),
        regime=Regime.TWO_ARM if K == 2 else Regime.MULTI_ARM,
        side_condition_ok=side_conditions_ok(r, K, sigmas),
    )


def bayes_prefactor(K: int, r: float) -> float:
    return 1.0 / (1.0 - (K - 2) * r / K)


def bayes_constants(
    K: int,
    families: Family | Sequence[Family],
    prior: PriorSpec,
    r: float,
    draws: int,
    rng: np.random.Generator,
) -> BayesBoundReport:
    """
    Monte Carlo evaluation of 4 sum_a E[sigma^2 of the best other arm * h_a].

    For each arm a, the other K - 1 means are drawn from the prior, the variance of
    the best of them is evaluated at its mean and multiplied by the conditional
    density of mu_a there (1 / (hi - lo) for a uniform prior). The upper constant
    inflates the lower one by 1 / (1 - (K - 2) r / K).
    """
    prior.require_uniform()
    if K < 2:
        raise ValueError(f"Bayes constants need K >= 2, got {K}")
    if draws < MIN_BAYES_DRAWS:
        raise ValueError(f"draws must be >= {MIN_BAYES_DRAWS}, got {draws}")
    if not 0 <= r < 1:
        raise ValueError(f"r must lie in [0, 1), got {r}")
    width = prior.hi - prior.lo
    if width <= 0:
        raise ValueError("Bayes constants need a prior with positive width")
    if not isinstance(families, (list, tuple)):
        families = [families] * K
    if len(families) != K:
        raise ValueError(f"expected {K} families, got {len(families)}")

    density = 1.0 / width
    total = 0.0
    se_squared = 0.0
    rows = np.arange(draws)
    for a in range(K):
        others = [b for b in range(K) if b != a]
        mus = rng.uniform(prior.lo, prior.hi, size=(draws, K - 1))
        best_col = np.argmax(mus, axis=1)
        best_mu = mus[rows, best_col]
        integrand = np.empty(draws)
        for col, b in enumerate(others):
            mask = best_col == col
            integrand[mask] = families[b].variance_at(best_mu[mask])
        integrand *= density
        total += float(integrand.mean())
        se_squared += float(integrand.var(ddof=1)) / draws

    lower = 4.0 * total
    prefactor = bayes_prefactor(K, r)
    return BayesBoundReport(
        lower_constant=lower,
        upper_constant=lower * prefactor,
        mc_sigma=4.0 * math.sqrt(se_squared),
        prefactor=prefactor,
        draws=draws,
    )


def asymptotic_variance(sigmas: Sequence[float], w: Sequence[float]) -> float:
    """sigma_best^2 / w_best + sigma_b^2 / w_b."""
    if any(not 0 < weight < 1 for weight in w):
        raise ValueError("allocation weights must lie in (0, 1)")
    return sigmas[0] ** 2 / w[0] + sigmas[1] ** 2 / w[1]


def misid_normal_oracle(
    gap: float,
    sigmas: Sequence[float],
    w: Sequence[float],
    T: int,
) -> MisidOracle:
    """
    Normal-approximation misidentification probability Phi(-sqrt(T) gap / sqrt(V)) and
    its Chernoff envelope exp(-T gap^2 / (2V)).
    """
    if gap < 0:
        raise ValueError("gap must be >= 0")
    v = asymptotic_variance(sigmas, w)
    z = math.sqrt(T) * gap / math.sqrt(v)
    return MisidOracle(
        probability=float(norm.cdf(-z)),
        envelope=math.exp(-0.5 * z * z),
        z=z,
        asymptotic_variance=v,
    )


def _golden_argmax(objective, scale: float) -> float:
    result = minimize_scalar(
        lambda c: -objective(c),
        bracket=(0.1 * scale, scale, 10.0 * scale),
        method="golden",
        tol=1e-10,
    )
    return float(result.x)


def chernoff_gap_oracle(sigmas: Sequence[float], T: int) -> tuple[float, float]:
    """
    Golden-section maximiser of gap * exp(-T gap^2 / (2 (sigma_1 + sigma_2)^2)).

    Returns ``(gap, sqrt(T) * value)``; for two arms these reproduce ``worst_gap`` and
    ``minimax_constant``.
    """
    spread = sigmas[0] + sigmas[1]

    def scaled(c):
        return c * math.exp(-c * c / (2.0 * spread * spread))

    c_star = _golden_argmax(scaled, spread)
    return c_star / math.sqrt(T), scaled(c_star)


def normal_regret_oracle(
    sigmas: Sequence[float], w: Sequence[float], T: int
) -> tuple[float, float]:
    """
    Golden-section maximiser of sqrt(T) gap * Phi(-sqrt(T) gap / sqrt(V)).

    The normal prediction of the worst-case scaled regret of a two-arm design that
    ends up with allocation ``w``. Returns ``(gap, scaled_regret)``.
    """
    root_v = math.sqrt(asymptotic_variance(sigmas, w))

    def scaled(c):
        return c * float(norm.cdf(-c / root_v))

    c_star = _golden_argmax(scaled, root_v)
    return c_star / math.sqrt(T), scaled(c_star)
