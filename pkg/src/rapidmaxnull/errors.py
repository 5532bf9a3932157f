"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage errors exit 2, data errors exit 3,
numerical failures exit 4.
"""


class UsageError(ValueError):
    """Invalid parameter combination or out-of-contract call."""


class DataFormatError(RuntimeError):
    """Malformed or unreadable matrix file; message carries the location."""


class NumericalError(ArithmeticError):
    """Numerical failure that invalidates the result."""


class DegenerateVoxelError(NumericalError):
    """Zero pooled variance with unequal group means at some voxel."""

    def __init__(self, voxel: int, mean_diff: float):
        self.voxel = voxel
        self.mean_diff = mean_diff
        super().__init__(
            f"voxel {voxel}: zero pooled variance with group mean difference "
            f"{mean_diff:.6g}; statistic would be infinite"
        )


class IllConditionedBasisError(NumericalError):
    """Observed-row restriction of the basis is numerically rank-deficient.

    Callers are expected to resample the observation set and retry.
    """

    def __init__(self, cond: float):
        self.cond = cond
        super().__init__(
            f"restricted basis condition number {cond:.3e} exceeds 1e12; "
            f"resample the observed rows"
        )
