"""Evaluation package boundary."""

from evals.design_comparison import compare_designs, render_design_comparison_markdown
from evals.harness import (
    AggregateStats,
    ConcentrationReport,
    PolicyKind,
    PolicySpec,
    ScanReport,
    SimPlan,
    adversarial_instance,
    bayes_eval,
    c_grid,
    concentration_check,
    regret_decomposition_check,
    simulate,
    worst_case_scan,
)

__all__ = [
    "AggregateStats",
    "ConcentrationReport",
    "PolicyKind",
    "PolicySpec",
    "ScanReport",
    "SimPlan",
    "adversarial_instance",
    "bayes_eval",
    "c_grid",
    "concentration_check",
    "regret_decomposition_check",
    "simulate",
    "worst_case_scan",
    "compare_designs",
    "render_design_comparison_markdown",
]
