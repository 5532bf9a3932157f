import numpy as np
import pytest

from rapidmaxnull import RunConfig, gen_sim1, run_naive, run_rapid

# one fixed seed for the heavyweight shared fixtures
SEED = 20260810


@pytest.fixture(scope="session")
def sim1():
    x, signal = gen_sim1(SEED)
    return x, signal


@pytest.fixture(scope="session")
def sim1_naive_10k(sim1):
    """Exhaustive reference null on the standard dataset, L=10000."""
    x, _ = sim1
    cfg = RunConfig(permutations=10000, seed=SEED, engine="naive")
    plan = cfg.plan_for(x)
    null, _, counters = run_naive(x, plan)
    return null, counters


@pytest.fixture(scope="session")
def sim1_rapid_10k(sim1):
    """Accelerated null on the standard dataset at default hyperparameters."""
    x, _ = sim1
    cfg = RunConfig(permutations=10000, seed=SEED, engine="rapid")
    null, model, counters = run_rapid(x, cfg)
    return null, model, counters


def rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
