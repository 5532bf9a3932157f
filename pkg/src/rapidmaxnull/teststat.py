"""Vectorized voxel-wise two-sample statistics and max-null queries.

The statistic is the two-sample t with unbiased per-group variances,
t = (mean1 - mean2) / sqrt(s1^2/n1 + s2^2/n2), evaluated row-wise.  The
kernel reduces along the last axis of C-contiguous blocks, so the value at a
voxel depends only on that voxel's row; computing any row subset through the
same kernel reproduces the full computation bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateVoxelError, UsageError
from .model import DataMatrix, MaxNull


@dataclass(frozen=True)
class StatColumn:
    """All voxel statistics for one labeling."""

    values: np.ndarray
    permutation_index: int


def _welch_rows(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Row-wise statistic on contiguous group blocks.

    Reduces along the last axis, so stacked inputs reshaped to rows produce
    bit-identical values to per-block calls.  Zero pooled variance with equal
    means continues to t=0; with unequal means it aborts, because downstream
    completion assumes finite entries.
    """
    n1 = x1.shape[-1]
    n2 = x2.shape[-1]
    m1 = x1.mean(axis=-1)
    m2 = x2.mean(axis=-1)
    var_term = x1.var(axis=-1, ddof=1) / n1 + x2.var(axis=-1, ddof=1) / n2
    num = m1 - m2
    zero = var_term == 0.0
    if zero.any():
        degenerate = zero & (num != 0.0)
        if degenerate.any():
            voxel = int(np.argmax(degenerate))
            raise DegenerateVoxelError(voxel, float(num.ravel()[voxel]))
        var_term = var_term.copy()
        var_term[zero] = 1.0       # numerator is 0 there, t continues to 0
    return num / np.sqrt(var_term)


def tstat_full(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Statistics for all voxels given the two group blocks (voxels x subjects)."""
    x1 = np.ascontiguousarray(x1, dtype=np.float64)
    x2 = np.ascontiguousarray(x2, dtype=np.float64)
    if x1.ndim != 2 or x2.ndim != 2 or x1.shape[0] != x2.shape[0]:
        raise UsageError("group blocks must be 2-D with matching voxel rows")
    if x1.shape[1] < 2 or x2.shape[1] < 2:
        raise UsageError("each group needs at least two subjects")
    return _welch_rows(x1, x2)


def tstat_subset(x1: np.ndarray, x2: np.ndarray, voxel_indices: np.ndarray) -> np.ndarray:
    """`tstat_full` restricted to `voxel_indices`, bit-identical to the full run."""
    idx = np.asarray(voxel_indices)
    if idx.ndim != 1:
        raise UsageError("voxel indices must be 1-D")
    if idx.size == 0:
        raise UsageError("voxel index subset is empty")
    if np.unique(idx).size != idx.size:
        raise UsageError("voxel indices contain duplicates")
    if idx.min() < 0 or idx.max() >= np.asarray(x1).shape[0]:
        raise UsageError("voxel index out of range")
    x1 = np.ascontiguousarray(x1, dtype=np.float64)
    x2 = np.ascontiguousarray(x2, dtype=np.float64)
    return tstat_full(x1[idx], x2[idx])


def stat_map(x: DataMatrix, order: np.ndarray | None = None) -> np.ndarray:
    """Full statistic map under a labeling (identity when `order` is None)."""
    if order is None:
        order = np.arange(x.subjects)
    x1, x2 = x.group_blocks(np.asarray(order))
    return tstat_full(x1, x2)


def column_max(values: np.ndarray, two_sided: bool) -> float:
    """The max-null contribution of one statistic column."""
    return float(np.abs(values).max() if two_sided else values.max())


def pvalue(null: MaxNull, observed: float) -> float:
    """Fraction of the null at least as extreme as `observed`; floored at 1/L.

    The identity labeling is permutation 0 and its maximum is part of the
    null, so the smallest attainable value is 1/L without any +1 adjustment.
    """
    s = null.sorted_view
    count_ge = s.size - np.searchsorted(s, observed, side="left")
    return max(int(count_ge), 1) / s.size


def threshold_at(null: MaxNull, alpha: float) -> float:
    """Smallest order statistic whose p-value is <= alpha.

    At most floor(alpha*L) maxima may sit at or above the threshold.  When no
    order statistic satisfies that (ties at the top), the (L - floor(alpha*L))-th
    order statistic is returned, which keeps the degenerate all-equal null
    meaningful.
    """
    if not 0.0 < alpha < 1.0:
        raise UsageError(f"alpha must be in (0, 1), got {alpha}")
    s = null.sorted_view
    L = s.size
    allowed = int(np.floor(alpha * L + 1e-9))
    if allowed < 1:
        raise UsageError(
            f"alpha={alpha} below the resolution 1/L={1.0 / L:.3g}; increase permutations"
        )
    first_ge = np.searchsorted(s, s, side="left")
    ok = (L - first_ge) <= allowed
    if ok.any():
        return float(s[int(np.argmax(ok))])
    return float(s[L - allowed])


def reject_set(stat_map_values: np.ndarray, tau: float) -> np.ndarray:
    """Sorted indices of voxels whose statistic is >= tau."""
    values = np.asarray(stat_map_values)
    return np.flatnonzero(values >= tau)
