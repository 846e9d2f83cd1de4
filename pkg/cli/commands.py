"""
Subcommand dispatch for ``run.py``.

Exit codes: 0 success, 2 invalid configuration, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
from typing import Sequence

import yaml
from pydantic import ValidationError

from analytics.bounds import bayes_constants, chernoff_gap_oracle, minimax_report
from analytics.utils import constants_rng
from cli.config import COMMANDS, ConfigError, RunConfig, load_config
from cli.emit import emit
from evals.design_comparison import compare_designs
from evals.harness import SimPlan, bayes_eval, simulate, worst_case_scan

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def run_simulate(cfg: RunConfig):
    plan = SimPlan(cfg.policy_spec(), cfg.instance(), cfg.reps, cfg.seed)
    return simulate(plan)


def run_scan(cfg: RunConfig):
    return worst_case_scan(
        cfg.policy_spec(),
        cfg.arm_count,
        cfg.sigmas or [],
        cfg.T,
        cfg.gap_grid(),
        cfg.reps,
        base_seed=cfg.seed,
        family=cfg.family,
        space=cfg.param_space(),
    )


def run_bayes(cfg: RunConfig):
    K = cfg.arm_count
    families = cfg.families()
    prior = cfg.prior_spec()
    scaled, scaled_se = bayes_eval(
        cfg.policy_spec(),
        K,
        families,
        prior,
        cfg.T,
        cfg.prior_draws,
        cfg.reps_per_draw,
        base_seed=cfg.seed,
    )
    constants = bayes_constants(K, families, prior, cfg.r, cfg.bayes_draws, constants_rng(cfg.seed))
    return {
        "T": cfg.T,
        "prior_draws": cfg.prior_draws,
        "reps_per_draw": cfg.reps_per_draw,
        "scaled_bayes_regret": scaled,
        "scaled_bayes_regret_se": scaled_se,
        "lower_constant": constants.lower_constant,
        "upper_constant": constants.upper_constant,
        "constant_mc_sigma": constants.mc_sigma,
        "within_bound": scaled <= constants.upper_constant + 3.0 * scaled_se,
    }


def run_bounds(cfg: RunConfig):
    K = cfg.arm_count
    sigmas = cfg.bound_sigmas()
    report = minimax_report(K, sigmas, cfg.T, cfg.r)
    row = {
        "K": K,
        "T": cfg.T,
        "minimax_constant": report.minimax_constant,
        "worst_gap": report.worst_gap,
        "regime": report.regime.value,
        "side_condition_ok": report.side_condition_ok,
    }
    if K == 2:
        gap, value = chernoff_gap_oracle(sigmas, cfg.T)
        row["oracle_gap"] = gap
        row["oracle_constant"] = value
    if cfg.prior is not None:
        bayes = bayes_constants(
            K, cfg.families(), cfg.prior_spec(), cfg.r, cfg.bayes_draws, constants_rng(cfg.seed)
        )
        row["bayes_lower_constant"] = bayes.lower_constant
        row["bayes_upper_constant"] = bayes.upper_constant
        row["bayes_mc_sigma"] = bayes.mc_sigma
        row["bayes_prefactor"] = bayes.prefactor
    return row


def run_kl_check(cfg: RunConfig):
    return cfg.kl_rows()


def run_compare(cfg: RunConfig):
    rows = compare_designs(
        cfg.instance(), cfg.T, cfg.r, cfg.reps, base_seed=cfg.seed, radius_mult=cfg.radius_mult
    )
    return [{key: value for key, value in row.items() if key != "stats"} for row in rows]


HANDLERS = {
    "simulate": run_simulate,
    "scan": run_scan,
    "bayes": run_bayes,
    "bounds": run_bounds,
    "kl-check": run_kl_check,
    "compare": run_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="run.py",
        description="Fixed-budget best-arm identification simulation lab",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("config", help="YAML run document")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--reps", type=int, default=None)
    parser.add_argument("--output", default=None, help="output file (stdout when omitted)")
    parser.add_argument("--format", choices=("csv", "jsonl"), default=None)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        "command": args.command,
        "seed": args.seed,
        "reps": args.reps,
        "output_path": args.output,
        "format": args.format,
    }
    try:
        cfg = load_config(args.config, overrides)
    except OSError as exc:
        logger.error("cannot read run document %s: %s", args.config, exc)
        return EXIT_CONFIG
    except (ConfigError, ValidationError, yaml.YAMLError) as exc:
        logger.error("invalid run document %s: %s", args.config, exc)
        return EXIT_CONFIG

    try:
        report = HANDLERS[cfg.command](cfg)
        emit(report, cfg.format, cfg.output_path)
    except Exception as exc:
        logger.error("%s failed: %s", cfg.command, exc)
        return EXIT_RUNTIME

    if cfg.output_path:
        logger.info("%s report written to %s", cfg.command, cfg.output_path)
    return EXIT_OK
