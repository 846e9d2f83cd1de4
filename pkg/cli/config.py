"""
Run documents for the command-line front end.

A run document is a flat YAML mapping. ``parse_config`` loads it, applies CLI
overrides, checks types and unknown keys with pydantic, then builds every domain
object the chosen command needs so that precondition failures surface before any
simulation starts.
"""

from __future__ import annotations

import math
from typing import Any, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from analytics.bounds import PriorSpec
from analytics.model import (
    ArmModel,
    BanditInstance,
    Bernoulli,
    Family,
    GaussianKnownVar,
    ParamSpace,
    bernoulli_instance,
    fisher_approximation_rows,
    gaussian_instance,
    sup_variance,
)
from analytics.policy import TsEbaConfig, Variant
from evals.harness import PolicyKind, PolicySpec, adversarial_instance, c_grid

COMMANDS = ("simulate", "scan", "bayes", "bounds", "kl-check", "compare")
DEFAULT_EPSILONS = (1e-2, 1e-3, 1e-4)


class ConfigError(ValueError):
    """Invalid run document; ``field`` names the offending key."""

    def __init__(self, field: str, message: str, line: int | None = None):
        self.field = field
        self.message = message
        self.line = line
        location = f" (line {line})" if line is not None else ""
        super().__init__(f"{field}: {message}{location}")


class PriorConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: str = "uniform"
    lo: float
    hi: float


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: Literal["simulate", "scan", "bayes", "bounds", "kl-check", "compare"]
    family: Literal["gaussian", "bernoulli"] = "gaussian"
    K: Optional[int] = Field(default=None, ge=2)
    means: Optional[list[float]] = None
    sigmas: Optional[list[float]] = None
    space: Optional[tuple[float, float]] = None
    prior: Optional[PriorConfig] = None
    T: Optional[int] = Field(default=None, ge=2)
    r: float = 0.2
    variant: Variant = Variant.VARIANCE_BASED
    radius_mult: float = 1.0
    policy: PolicyKind = PolicyKind.TS_EBA
    reps: Optional[int] = Field(default=None, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    gaps: Optional[list[float]] = None
    c_values: Optional[list[float]] = None
    prior_draws: Optional[int] = Field(default=None, ge=1)
    reps_per_draw: Optional[int] = Field(default=None, ge=1)
    bayes_draws: int = Field(default=10_000, ge=1)
    epsilons: list[float] = Field(default_factory=lambda: list(DEFAULT_EPSILONS))
    output_path: Optional[str] = None
    format: Literal["csv", "jsonl"] = "csv"

    @property
    def arm_count(self) -> int | None:
        for values in (self.means, self.sigmas):
            if values:
                return len(values)
        return self.K

    def param_space(self) -> ParamSpace | None:
        return ParamSpace(*self.space) if self.space is not None else None

    def families(self) -> list[Family]:
        K = self.arm_count
        if self.family == "bernoulli":
            return [Bernoulli()] * K
        return [GaussianKnownVar(float(sigma) ** 2) for sigma in self.sigmas]

    def instance(self) -> BanditInstance:
        if self.family == "bernoulli":
            return bernoulli_instance(self.means, self.param_space())
        return gaussian_instance(self.means, self.sigmas, self.param_space())

    def bound_sigmas(self) -> list[float]:
        """Standard deviations entering the worst-case constants (sup over the space)."""
        space = self.param_space()
        return [math.sqrt(sup_variance(family, space)) for family in self.families()]

    def ts_eba_config(self) -> TsEbaConfig:
        return TsEbaConfig(
            T=self.T,
            r=self.r,
            K=self.arm_count,
            variant=self.variant,
            radius_mult=self.radius_mult,
        )

    def policy_spec(self) -> PolicySpec:
        if self.policy is PolicyKind.TS_EBA:
            return PolicySpec.ts_eba(self.ts_eba_config())
        return PolicySpec.baseline(self.policy.value, self.T)

    def prior_spec(self) -> PriorSpec:
        spec = PriorSpec(self.prior.lo, self.prior.hi, self.prior.kind)
        spec.require_uniform()
        return spec

    def gap_grid(self) -> list[float]:
        if self.gaps is not None:
            return list(self.gaps)
        if self.c_values is not None:
            return [c / math.sqrt(self.T) for c in self.c_values]
        return c_grid(self.T)

    def kl_arms(self) -> list[ArmModel]:
        return [
            ArmModel(family, float(mu), self.param_space())
            for family, mu in zip(self.families(), self.means)
        ]

    def kl_rows(self) -> list[dict]:
        rows = []
        for arm in self.kl_arms():
            rows.extend(fisher_approximation_rows(arm, self.epsilons))
        return rows

    def scan_instances(self) -> list[BanditInstance]:
        return [
            adversarial_instance(self.arm_count, self.sigmas, gap, self.family, self.param_space())
            for gap in self.gap_grid()
        ]


def _key_lines(text: str) -> dict[str, int]:
    """1-based line of every top-level key, for error messages."""
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return {}
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {
        str(key.value): key.start_mark.line + 1
        for key, _ in node.value
        if isinstance(key, yaml.ScalarNode)
    }


def _load_document(text: str) -> dict[str, Any]:
    try:
        payload = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError("document", f"malformed YAML: {exc}", line) from exc
    if payload is None:
        payload = {}
    if not isinstance(payload, dict):
        raise ConfigError("document", "run document must be a mapping of keys to values", 1)
    return payload


def _require(cfg: RunConfig, lines: dict[str, int], *fields: str):
    for name in fields:
        if getattr(cfg, name) is None:
            raise ConfigError(name, f"required for command {cfg.command!r}", lines.get(name))


def _domain(field: str, lines: dict[str, int], build):
    try:
        return build()
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(field, str(exc), lines.get(field)) from exc


def _check_lengths(cfg: RunConfig, lines: dict[str, int]):
    K = cfg.arm_count
    for name in ("means", "sigmas"):
        values = getattr(cfg, name)
        if values is not None and len(values) != K:
            raise ConfigError(name, f"expected {K} values, got {len(values)}", lines.get(name))
    if cfg.K is not None and K != cfg.K:
        raise ConfigError("K", f"K={cfg.K} disagrees with {K} listed arms", lines.get("K"))


def _check_domain(cfg: RunConfig, lines: dict[str, int]):
    command = cfg.command
    if cfg.family == "gaussian":
        _require(cfg, lines, "sigmas")
    if command in ("simulate", "compare"):
        _require(cfg, lines, "means", "T", "reps")
    elif command == "scan":
        _require(cfg, lines, "T", "reps")
        if cfg.arm_count is None:
            raise ConfigError("K", "scan needs K or a list of sigmas", lines.get("K"))
    elif command == "bayes":
        _require(cfg, lines, "prior", "T", "prior_draws", "reps_per_draw")
        if cfg.arm_count is None:
            raise ConfigError("K", "bayes needs K or a list of sigmas", lines.get("K"))
    elif command == "bounds":
        _require(cfg, lines, "T")
        if cfg.arm_count is None:
            raise ConfigError("K", "bounds needs K or a list of sigmas", lines.get("K"))
    elif command == "kl-check":
        _require(cfg, lines, "means")
    _check_lengths(cfg, lines)

    _domain("space", lines, cfg.param_space)
    if command in ("simulate", "compare"):
        _domain("means", lines, cfg.instance)
    if command == "kl-check":
        if any(not (eps > 0 and math.isfinite(eps)) for eps in cfg.epsilons):
            raise ConfigError("epsilons", "must be positive and finite", lines.get("epsilons"))
        _domain("means", lines, cfg.kl_arms)
        # the shifted arms mu + eps must stay inside the parameter space too
        _domain("means", lines, cfg.kl_rows)
    if command in ("scan", "bayes", "bounds"):
        _domain("sigmas", lines, cfg.bound_sigmas)
    if command in ("simulate", "scan", "bayes"):
        _domain("r", lines, cfg.policy_spec)
    if command == "compare":
        _domain("r", lines, cfg.ts_eba_config)
    if command == "scan":
        grid = _domain("gaps", lines, cfg.gap_grid)
        if not grid or any(not gap > 0 for gap in grid):
            raise ConfigError("gaps", "gap grid must be non-empty and positive", lines.get("gaps"))
        _domain("gaps", lines, cfg.scan_instances)
    if command == "bayes" or (command == "bounds" and cfg.prior is not None):
        _domain("prior", lines, cfg.prior_spec)


def parse_config(text: str, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Load, override and fully validate a run document."""
    lines = _key_lines(text)
    payload = _load_document(text)
    for key, value in (overrides or {}).items():
        if value is not None:
            payload[key] = value

    try:
        cfg = RunConfig.model_validate(payload)
    except ValidationError as exc:
        error = exc.errors()[0]
        loc = error.get("loc") or ("document",)
        field = ".".join(str(part) for part in loc)
        raise ConfigError(field, error.get("msg", "invalid value"), lines.get(str(loc[0]))) from exc

    _check_domain(cfg, lines)
    return cfg


def load_config(path: str, overrides: dict[str, Any] | None = None) -> RunConfig:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config(handle.read(), overrides)
