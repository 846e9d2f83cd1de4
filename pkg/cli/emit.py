"""
CSV / JSONL writers for run reports.

Column order is fixed per report type (see README). Numbers are rendered with
nine significant digits; JSONL rows carry the same field names as the CSV header.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from enum import Enum
from typing import Any, Sequence

import pandas as pd

from analytics.bounds import BayesBoundReport, BoundReport
from analytics.utils import format_sig, round_sig
from evals.harness import AggregateStats, ConcentrationReport, ScanReport

SCAN_COLUMNS = [
    "row",
    "gap",
    "scaled_regret",
    "regret_se",
    "misid_rate",
    "early_stop_rate",
    "sup",
    "argmax_gap",
    "bound_constant",
    "within_bound",
]


def _plain(value):
    if isinstance(value, Enum):
        return value.value
    return value


def _aggregate_row(stats: AggregateStats) -> dict[str, Any]:
    row = {
        "T": stats.T,
        "reps": stats.reps,
        "mean_regret": stats.mean_regret,
        "regret_se": stats.regret_se,
        "scaled_regret": stats.scaled_regret,
        "scaled_regret_se": stats.scaled_regret_se,
        "misid_rate": stats.misid_rate,
        "misid_se": stats.misid_se,
        "early_stop_rate": stats.early_stop_rate,
    }
    for prefix, values in (
        ("mean_count", stats.mean_counts),
        ("choice_freq", stats.choice_freq),
        ("stage2_share", stats.stage2_share),
    ):
        for arm, value in enumerate(values):
            row[f"{prefix}_{arm}"] = value
    return row


def _scan_rows(report: ScanReport) -> list[dict[str, Any]]:
    if not report.grid:
        raise ValueError("scan report has an empty grid")
    rows = [
        {
            "row": "grid",
            "gap": gap,
            "scaled_regret": stats.scaled_regret,
            "regret_se": stats.scaled_regret_se,
            "misid_rate": stats.misid_rate,
            "early_stop_rate": stats.early_stop_rate,
        }
        for gap, stats in report.grid
    ]
    rows.append(
        {
            "row": "footer",
            "sup": report.sup_scaled_regret,
            "argmax_gap": report.argmax_gap,
            "bound_constant": report.bound_constant,
            "within_bound": report.within_bound,
        }
    )
    return rows


def report_rows(report) -> tuple[list[str], list[dict[str, Any]]]:
    """Flatten a report into ``(columns, rows)``."""
    if isinstance(report, ScanReport):
        return list(SCAN_COLUMNS), _scan_rows(report)
    if isinstance(report, AggregateStats):
        row = _aggregate_row(report)
        return list(row), [row]
    if isinstance(report, (BoundReport, BayesBoundReport, ConcentrationReport)):
        row = {key: _plain(value) for key, value in dataclasses.asdict(report).items()}
        return list(row), [row]
    if isinstance(report, dict):
        return list(report), [report]
    if isinstance(report, Sequence) and report and all(isinstance(row, dict) for row in report):
        columns: list[str] = []
        for row in report:
            columns.extend(key for key in row if key not in columns)
        return columns, list(report)
    raise TypeError(f"cannot emit report of type {type(report).__name__}")


def render(report, fmt: str = "csv") -> str:
    columns, rows = report_rows(report)
    if fmt == "csv":
        frame = pd.DataFrame(
            [[format_sig(_plain(row.get(col))) for col in columns] for row in rows],
            columns=columns,
            dtype=str,
        )
        return frame.to_csv(index=False, lineterminator="\n")
    if fmt == "jsonl":
        lines = [
            json.dumps({col: round_sig(_plain(row.get(col))) for col in columns}, sort_keys=False)
            for row in rows
        ]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown output format {fmt!r}")


def emit(report, fmt: str = "csv", path: str | None = None) -> str:
    """Write the rendered report to ``path`` (stdout when None) and return the text."""
    text = render(report, fmt)
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    return text
