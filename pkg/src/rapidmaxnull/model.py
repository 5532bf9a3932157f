"""Core domain types: data matrix, permutation plan, max-null distribution, run config.

All types are immutable after construction (arrays are marked read-only) and
safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import UsageError
from .streams import SHUFFLE, stream

ENGINES = ("naive", "rapid")
SHIFT_ESTIMATORS = ("residual-sup", "max-gap")


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DataMatrix:
    """Stacked subject data: `values` is voxels x subjects, columns 1..n1 are
    group 1 and the rest group 2 under the identity labeling."""

    values: np.ndarray
    n1: int
    n2: int

    def __post_init__(self):
        values = _freeze(self.values)
        object.__setattr__(self, "values", values)
        if values.ndim != 2:
            raise UsageError(f"data matrix must be 2-D, got shape {values.shape}")
        v, n = values.shape
        if v < 1:
            raise UsageError("data matrix needs at least one voxel row")
        if self.n1 < 2 or self.n2 < 2:
            raise UsageError(
                f"need at least two subjects per group for variance estimates, "
                f"got n1={self.n1}, n2={self.n2}"
            )
        if self.n1 + self.n2 != n:
            raise UsageError(
                f"group sizes n1+n2={self.n1 + self.n2} do not match column count {n}"
            )
        if not np.isfinite(values).all():
            bad = np.argwhere(~np.isfinite(values))[0]
            raise UsageError(f"non-finite entry at voxel {bad[0]}, subject {bad[1]}")

    @property
    def voxels(self) -> int:
        return self.values.shape[0]

    @property
    def subjects(self) -> int:
        return self.values.shape[1]

    def group_blocks(self, order: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Contiguous group blocks under the column shuffle `order`."""
        x1 = self.values[:, order[: self.n1]]
        x2 = self.values[:, order[self.n1:]]
        return x1, x2


def relabel(x: DataMatrix, order: np.ndarray) -> DataMatrix:
    """Reorder subject columns; the first n1 columns become pseudo-group 1."""
    order = np.asarray(order)
    if sorted(order.tolist()) != list(range(x.subjects)):
        raise UsageError("shuffle is not a bijection on the subject columns")
    return DataMatrix(x.values[:, order], x.n1, x.n2)


@dataclass(frozen=True)
class PermutationPlan:
    """Implicit sequence of column shuffles.

    Index 0 is, by convention, the identity (true) labeling; index i >= 1 is a
    Fisher-Yates shuffle drawn from `stream(master_seed, SHUFFLE, i)`.  The
    same (seed, index) regenerates the identical shuffle on any machine and
    under any thread count, so the plan is never materialized.
    """

    master_seed: int
    count: int
    subjects: int

    def __post_init__(self):
        if self.count < 1:
            raise UsageError("permutation count must be >= 1")
        if self.subjects < 1:
            raise UsageError("subject count must be >= 1")

    def shuffle(self, i: int) -> np.ndarray:
        if not 0 <= i < self.count:
            raise UsageError(f"permutation index {i} outside [0, {self.count})")
        if i == 0:
            return np.arange(self.subjects)
        return stream(self.master_seed, SHUFFLE, i).permutation(self.subjects)


def permute_columns(x: DataMatrix, plan: PermutationPlan, i: int) -> DataMatrix:
    """The data matrix relabeled by shuffle `i` of the plan."""
    if plan.subjects != x.subjects:
        raise UsageError("plan and data matrix disagree on subject count")
    return relabel(x, plan.shuffle(i))


class MaxNull:
    """The L per-permutation maximum statistics, in permutation order."""

    def __init__(self, maxima: np.ndarray):
        maxima = np.asarray(maxima, dtype=np.float64)
        if maxima.ndim != 1 or maxima.size < 1:
            raise UsageError("maxima must be a non-empty 1-D array")
        if not np.isfinite(maxima).all():
            raise UsageError("maxima contain non-finite values")
        self._maxima = _freeze(maxima)
        self._sorted: Optional[np.ndarray] = None

    @property
    def maxima(self) -> np.ndarray:
        return self._maxima

    @property
    def sorted_view(self) -> np.ndarray:
        """Nondecreasing copy, cached for quantile queries."""
        if self._sorted is None:
            self._sorted = _freeze(np.sort(self._maxima))
        return self._sorted

    def __len__(self) -> int:
        return self._maxima.size

    def __eq__(self, other) -> bool:
        return isinstance(other, MaxNull) and np.array_equal(self._maxima, other._maxima)


@dataclass(frozen=True)
class RunConfig:
    """Engine selection plus hyperparameters.

    `training_columns`, `sample_rate` and `rank` default to the recommended
    values (n, twice the minimum viable sampling rate, and n) when left None;
    `resolve` pins them against a concrete data matrix.
    """

    permutations: int
    seed: int
    engine: str = "rapid"
    two_sided: bool = False
    training_columns: Optional[int] = None   # ell
    sample_rate: Optional[float] = None      # eta
    rank: Optional[int] = None               # r
    max_passes: int = 50
    tolerance: float = 1e-3
    shift_estimator: str = "max-gap"
    sigma_override: Optional[float] = None
    shift_override: Optional[float] = None
    threads: Optional[int] = None

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise UsageError(f"unknown engine {self.engine!r}; choose from {ENGINES}")
        if self.permutations < 1:
            raise UsageError("permutation count must be >= 1")
        if self.max_passes < 1:
            raise UsageError("max_passes must be >= 1")
        if self.shift_estimator not in SHIFT_ESTIMATORS:
            raise UsageError(
                f"unknown shift estimator {self.shift_estimator!r}; "
                f"choose from {SHIFT_ESTIMATORS}"
            )
        if self.threads is not None and self.threads < 1:
            raise UsageError("thread count must be >= 1")

    def resolve(self, x: DataMatrix) -> "RunConfig":
        """Fill defaults from the data and validate the joint invariants."""
        from .lrmc import min_sample_rate   # local import, avoids a cycle

        n = x.subjects
        v = x.voxels
        ell = self.training_columns if self.training_columns is not None else n
        rank = self.rank if self.rank is not None else n
        eta = self.sample_rate
        if eta is None:
            eta = min(2.0 * min_sample_rate(v, n), 1.0) if v > 1 else 1.0
        if not 0.0 < eta <= 1.0:
            raise UsageError(f"sample rate must be in (0, 1], got {eta}")
        if not 1 <= rank <= n:
            raise UsageError(f"rank must be in [1, n={n}], got {rank}")
        if self.engine == "rapid":
            if ell > self.permutations:
                raise UsageError(
                    f"training columns ({ell}) exceed permutation count ({self.permutations})"
                )
            if ell < rank:
                raise UsageError(
                    f"training columns cannot identify rank: ell={ell} < rank={rank}"
                )
            k = int(np.ceil(eta * v))
            if k < rank:
                raise UsageError(
                    f"observed rows per column ({k}) below rank ({rank}); "
                    f"the least-squares fit would be underdetermined"
                )
        return replace(self, training_columns=ell, sample_rate=eta, rank=rank)

    def plan_for(self, x: DataMatrix) -> PermutationPlan:
        return PermutationPlan(self.seed, self.permutations, x.subjects)
