"""
Shared helpers for seeding, deterministic summation and number rendering.

Centralizes replication seeding so every module derives streams the same way.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

# spawn-key words reserved for auxiliary streams; replication keys are small indices
PRIOR_STREAM_KEY = 2**63 + 1
CONSTANTS_STREAM_KEY = 2**63 + 2
SIG_DIGITS = 9


def replication_rng(base_seed: int, index: int) -> np.random.Generator:
    """Generator for replication ``index`` of a run seeded with ``base_seed``.

    ``SeedSequence`` hashes ``(base_seed, index)`` into an independent stream, so
    the stream of a replication does not depend on how replications are scheduled.
    Per-arm streams are spawned from it inside the policy.
    """
    if base_seed < 0 or index < 0:
        raise ValueError("base_seed and replication index must be >= 0")
    return np.random.default_rng(np.random.SeedSequence(entropy=base_seed, spawn_key=(index,)))


def _reserved_rng(base_seed: int, key: int) -> np.random.Generator:
    if base_seed < 0:
        raise ValueError("base_seed must be >= 0")
    return np.random.default_rng(np.random.SeedSequence(entropy=base_seed, spawn_key=(key,)))


def prior_rng(base_seed: int) -> np.random.Generator:
    """Stream for prior mean draws in Bayes runs."""
    return _reserved_rng(base_seed, PRIOR_STREAM_KEY)


def constants_rng(base_seed: int) -> np.random.Generator:
    """Stream for the Monte Carlo Bayes constants, independent of the prior draws."""
    return _reserved_rng(base_seed, CONSTANTS_STREAM_KEY)


def chunk_ranges(n: int, chunks: int) -> list[tuple[int, int]]:
    """Split ``range(n)`` into at most ``chunks`` contiguous ``(start, stop)`` pieces."""
    chunks = max(1, min(int(chunks), n))
    base, extra = divmod(n, chunks)
    ranges = []
    start = 0
    for idx in range(chunks):
        stop = start + base + (1 if idx < extra else 0)
        ranges.append((start, stop))
        start = stop
    return ranges


def fsum_mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def standard_error(values: Sequence[float], mean: float | None = None) -> float:
    """Standard error of the mean; zero for a single value."""
    n = len(values)
    if n < 2:
        return 0.0
    center = fsum_mean(values) if mean is None else mean
    sum_sq = math.fsum((float(x) - center) ** 2 for x in values)
    return math.sqrt(sum_sq / (n - 1) / n)


def format_sig(value, digits: int = SIG_DIGITS) -> str:
    """Render a scalar for reports: floats with ``digits`` significant digits."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.{digits}g}"
    return str(value)


def round_sig(value, digits: int = SIG_DIGITS):
    """Same rounding as ``format_sig`` but keeps numbers numeric (for JSON)."""
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return None
        return float(f"{value:.{digits}g}")
    return value
