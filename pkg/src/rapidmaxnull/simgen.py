"""Deterministic synthetic dataset generators.

Both generators build a voxels x subjects matrix with two equal groups:
group 1 is pure standard normal noise, and a seeded subset of voxels in
group 2 carries a mean shift.  The standard dataset is 20000 voxels by 30
subjects with a 1% signal of strength 1; the grid generator covers the
n x strength x sparsity sweep (3*4*4 = 48 cells at the canonical values).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import UsageError
from .model import DataMatrix
from .streams import SIM_NOISE, SIM_SIGNAL, stream

SIM1_VOXELS = 20000
SIM1_SUBJECTS = 30
SIM1_SPARSITY = 0.01
SIM1_EFFECT = 1.0

GRID_SUBJECTS = (60, 150, 600)
GRID_EFFECTS = (1.0, 5.0, 10.0, 25.0)
GRID_SPARSITIES = (0.01, 0.05, 0.10, 0.25)


@dataclass(frozen=True)
class SimSpec:
    """Grid-cell description: subject count (split equally), voxel count,
    signal strength, signal sparsity, and the master seed."""

    n: int
    v: int
    effect_mu: float
    sparsity: float
    seed: int

    def __post_init__(self):
        if self.n % 2 != 0:
            raise UsageError(f"subject count must split into equal groups, got {self.n}")
        if self.n < 4:
            raise UsageError("need at least two subjects per group")
        if self.v < 1:
            raise UsageError("need at least one voxel")
        if not 0.0 < self.sparsity <= 1.0:
            raise UsageError(f"sparsity must be in (0, 1], got {self.sparsity}")


def _generate(spec: SimSpec) -> tuple[DataMatrix, np.ndarray]:
    n1 = spec.n // 2
    values = stream(spec.seed, SIM_NOISE).standard_normal((spec.v, spec.n))
    n_signal = int(np.ceil(spec.sparsity * spec.v))
    signal = np.sort(stream(spec.seed, SIM_SIGNAL).choice(spec.v, size=n_signal, replace=False))
    values[np.ix_(signal, np.arange(n1, spec.n))] += spec.effect_mu
    return DataMatrix(values, n1, spec.n - n1), signal


def gen_sim1(seed: int) -> tuple[DataMatrix, np.ndarray]:
    """The 20000x30 dataset: 15/15 groups, 200 signal voxels of strength 1.

    Returns the matrix and the sorted signal voxel indices (for manifests
    and ground-truth scoring of rejection sets).
    """
    spec = SimSpec(n=SIM1_SUBJECTS, v=SIM1_VOXELS, effect_mu=SIM1_EFFECT,
                   sparsity=SIM1_SPARSITY, seed=seed)
    return _generate(spec)


def gen_sim2(spec: SimSpec) -> tuple[DataMatrix, np.ndarray]:
    """One cell of the synthetic grid; off-grid values are allowed with a warning."""
    if spec.n not in GRID_SUBJECTS:
        warnings.warn(
            f"subject count {spec.n} is off the canonical grid {GRID_SUBJECTS}",
            stacklevel=2,
        )
    if spec.effect_mu not in GRID_EFFECTS:
        warnings.warn(
            f"signal strength {spec.effect_mu} is off the canonical grid {GRID_EFFECTS}",
            stacklevel=2,
        )
    if spec.sparsity not in GRID_SPARSITIES:
        warnings.warn(
            f"sparsity {spec.sparsity} is off the canonical grid {GRID_SPARSITIES}",
            stacklevel=2,
        )
    return _generate(spec)


def grid_specs(seed: int, v: int = SIM1_VOXELS) -> list[SimSpec]:
    """All 48 canonical grid cells."""
    return [
        SimSpec(n=n, v=v, effect_mu=mu, sparsity=sp, seed=seed)
        for n, mu, sp in product(GRID_SUBJECTS, GRID_EFFECTS, GRID_SPARSITIES)
    ]
