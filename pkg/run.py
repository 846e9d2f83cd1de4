"""
Best-Arm Identification Lab - Entry Point

Usage:
    python run.py simulate config/simulate.yaml   Monte Carlo regret and misidentification
    python run.py scan     config/scan_k2.yaml    Worst-case scan over gaps c/sqrt(T)
    python run.py bayes    config/bayes.yaml      T-scaled Bayes regret under a uniform prior
    python run.py bounds   config/bounds.yaml     Closed-form minimax (and Bayes) constants
    python run.py kl-check config/kl_check.yaml   KL vs Fisher-information quadratic check
    python run.py compare  config/compare.yaml    TS-EBA against uniform and Neyman baselines

Options (override the run document):
    --seed N  --reps N  --output PATH  --format csv|jsonl

Environment:
    BAI_WORKERS     process-pool size for replications (default 1)
    BAI_LOG_LEVEL   logging level (default INFO)

Exit codes: 0 success, 2 invalid run document, 3 runtime failure.
"""

import logging
import os
import sys

from cli.commands import main

logger = logging.getLogger("bai_lab")
if not logger.handlers:
    logging.basicConfig(level=os.getenv("BAI_LOG_LEVEL", "INFO").upper())


if __name__ == "__main__":
    if len(sys.argv) < 2:
        print(__doc__)
        sys.exit(0)
    sys.exit(main(sys.argv[1:]))
