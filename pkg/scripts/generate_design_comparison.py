#!/usr/bin/env python3
"""
Generate the design comparison markdown artifact.

Output:
    docs/design_comparison.md
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from analytics.model import gaussian_instance
from evals.design_comparison import compare_designs, render_design_comparison_markdown

T = 6000
R = 0.15
REPS = int(os.getenv("BAI_COMPARE_REPS", "20000"))


def main():
    instance = gaussian_instance([0.05, 0.0, 0.0], [1.0, 2.0, 0.5])
    rows = compare_designs(instance, T, R, REPS, base_seed=5)
    output = Path("docs/design_comparison.md")
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(render_design_comparison_markdown(rows, instance, T, R), encoding="utf-8")
    print(f"Design comparison written: {output}")
    for row in rows:
        print(f"  {row['design']}: sqrt(T) regret {row['scaled_regret']:.4f}")


if __name__ == "__main__":
    main()
