"""Deterministic per-purpose random streams.

Every random draw in the package comes from a generator derived as
``stream(master_seed, domain, *path)``.  Derivation goes through
``numpy.random.SeedSequence`` spawn keys, so streams are independent,
reproducible across machines, and independent of evaluation order or
thread count.  Regenerating a stream with the same (seed, path) always
replays the identical sequence.

Domain constants keep unrelated draws (column shuffles, observation sets,
synthetic residuals, data generation) on disjoint streams.
"""

from __future__ import annotations

import numpy as np

# stream domains; never renumber, reports depend on replay
SHUFFLE = 1          # per-permutation column shuffles
TRAIN_OMEGA = 2      # per (training column, pass) observed-row draws
RECOVER_OMEGA = 3    # per recovery column observed-row draws
RESIDUAL = 4         # per recovery column synthetic residuals
BASIS_INIT = 5       # basis initialisation
SIM_NOISE = 6        # simulated data: background noise
SIM_SIGNAL = 7       # simulated data: signal voxel placement
SHIFT_GAP = 8        # residual draws used by the max-gap shift estimator

_MASK = (1 << 64) - 1


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator for `(seed, path)`.

    The same arguments always produce the same stream; distinct paths
    produce statistically independent streams.
    """
    key = np.random.SeedSequence(entropy=int(seed) & _MASK, spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.SFC64(key))
