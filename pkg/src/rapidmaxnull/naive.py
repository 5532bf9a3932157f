"""Exhaustive Monte-Carlo engine: every statistic of every permutation.

This is the reference implementation the accelerated engine is judged
against.  It evaluates all v statistics for each of the L shuffles, keeps the
per-permutation maximum, and only materializes the full statistic matrix on
request (v*L doubles is far beyond memory at realistic scale).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import UsageError
from .model import DataMatrix, MaxNull, PermutationPlan
from .teststat import column_max, tstat_full

DEFAULT_MEM_CAP_BYTES = 2 << 30


@dataclass(frozen=True)
class StatMatrix:
    """Dense voxels x permutations statistic matrix plus the plan behind it."""

    values: np.ndarray
    plan: PermutationPlan

    def __post_init__(self):
        if self.values.shape[1] != self.plan.count:
            raise UsageError("statistic matrix column count does not match the plan")


def resolve_threads(threads: Optional[int]) -> int:
    if threads is None:
        env = os.environ.get("RAPIDMAXNULL_THREADS")
        if env:
            threads = int(env)
    if threads is None:
        threads = os.cpu_count() or 1
    if threads < 1:
        raise UsageError(f"thread count must be >= 1, got {threads}")
    return threads


def _max_block(x: DataMatrix, plan: PermutationPlan, lo: int, hi: int,
               two_sided: bool, out: np.ndarray,
               store: Optional[np.ndarray]) -> None:
    for i in range(lo, hi):
        x1, x2 = x.group_blocks(plan.shuffle(i))
        col = tstat_full(x1, x2)
        if store is not None:
            store[:, i] = col
        out[i] = column_max(col, two_sided)


def run_naive(
    x: DataMatrix,
    plan: PermutationPlan,
    materialize: bool = False,
    two_sided: bool = False,
    threads: Optional[int] = None,
    mem_cap_bytes: int = DEFAULT_MEM_CAP_BYTES,
) -> tuple[MaxNull, Optional[StatMatrix], dict]:
    """Run the exhaustive engine.

    Returns the max null, the optional materialized statistic matrix, and a
    counter dict; `statistic_evaluations` is exactly v*L.  Results are
    deterministic for a fixed plan regardless of the thread count because
    every permutation index owns a derived stream and an output slot.
    """
    v, L = x.voxels, plan.count
    store = None
    if materialize:
        needed = v * L * 8
        if needed > mem_cap_bytes:
            raise UsageError(
                f"materializing the statistic matrix needs {needed} bytes "
                f"({v} voxels x {L} permutations x 8), above the cap {mem_cap_bytes}; "
                f"raise the cap or drop --dump-T"
            )
        store = np.empty((v, L), dtype=np.float64)

    nthreads = resolve_threads(threads)
    maxima = np.empty(L, dtype=np.float64)
    if nthreads == 1 or L < 4:
        _max_block(x, plan, 0, L, two_sided, maxima, store)
    else:
        # fixed-size blocks; block boundaries do not depend on the pool size
        block = max(32, (L + nthreads * 8 - 1) // (nthreads * 8))
        spans = [(lo, min(lo + block, L)) for lo in range(0, L, block)]
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            futs = [
                pool.submit(_max_block, x, plan, lo, hi, two_sided, maxima, store)
                for lo, hi in spans
            ]
            for f in futs:
                f.result()

    counters = {
        "full_statistic_evaluations": v * L,
        "subsampled_statistic_evaluations": 0,
        "statistic_evaluations": v * L,
    }
    mat = StatMatrix(store, plan) if store is not None else None
    return MaxNull(maxima), mat, counters
