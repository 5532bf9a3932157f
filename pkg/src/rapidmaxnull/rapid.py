"""Accelerated engine: train a low-rank-plus-residual model on a few fully
computed statistic columns, then synthesize the remaining columns from
sub-sampled statistics.

Training computes `ell` full columns, tracks a rank-r basis over them with
sub-sampled updates, and freezes the model: the residual scale is the
standard deviation of the observed-row fit residuals, and the max-shift
compensates the systematic downward bias of maxima taken over synthesized
columns.  Recovery evaluates only ceil(eta*v) statistics per remaining
permutation, fits coefficients, and adds a seeded Gaussian residual.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import IllConditionedBasisError, NumericalError, UsageError
from .lrmc import (
    COND_LIMIT,
    Basis,
    ObservedColumn,
    complete_column,
    fit_coefficients,
    solve_block,
    train_basis,
)
from .model import DataMatrix, MaxNull, PermutationPlan, RunConfig
from .naive import resolve_threads
from .streams import RECOVER_OMEGA, RESIDUAL, SHIFT_GAP, stream
from .teststat import _welch_rows, column_max, tstat_full

_BLOCK = 256
_RESAMPLE_ATTEMPTS = 5


@dataclass(frozen=True)
class SubspaceModel:
    """Frozen training artifact: basis, residual scale, max-shift, and the
    training maxima that enter the final null unshifted."""

    basis: Basis
    residual_std: float
    max_shift: float
    training_columns: int
    sample_rate: float
    training_maxima: np.ndarray
    two_sided: bool
    seed: int
    passes: int
    converged: bool

    def __post_init__(self):
        if self.residual_std < 0:
            raise UsageError("residual standard deviation must be >= 0")
        m = np.asarray(self.training_maxima, dtype=np.float64)
        m.setflags(write=False)
        object.__setattr__(self, "training_maxima", m)


def _training_columns(x: DataMatrix, plan: PermutationPlan, ell: int) -> np.ndarray:
    t_ex = np.empty((x.voxels, ell), dtype=np.float64)
    for i in range(ell):
        x1, x2 = x.group_blocks(plan.shuffle(i))
        t_ex[:, i] = tstat_full(x1, x2)
    return t_ex


def train(x: DataMatrix, cfg: RunConfig) -> tuple[SubspaceModel, np.ndarray, np.ndarray]:
    """Training phase: returns the model, the training maxima, and the
    training columns themselves."""
    cfg = cfg.resolve(x)
    if cfg.engine != "rapid":
        raise UsageError("training is only meaningful for the rapid engine")
    ell = cfg.training_columns
    v = x.voxels
    k = int(np.ceil(cfg.sample_rate * v))
    plan = cfg.plan_for(x)

    t_ex = _training_columns(x, plan, ell)
    tracked = train_basis(
        t_ex, k=k, rank=cfg.rank, seed=cfg.seed,
        max_passes=cfg.max_passes, tolerance=cfg.tolerance,
    )
    basis = tracked.basis

    # fits of the frozen basis on the final pass's observed rows
    fits = np.empty((cfg.rank, ell), dtype=np.float64)
    omega_resids = []
    for i in range(ell):
        col = ObservedColumn(tracked.final_omegas[i], t_ex[tracked.final_omegas[i], i])
        w = fit_coefficients(basis, col)
        fits[:, i] = w
        omega_resids.append(col.values - basis.matrix[col.indices] @ w)

    if cfg.sigma_override is not None:
        sigma = float(cfg.sigma_override)
        if sigma < 0:
            raise UsageError("sigma override must be >= 0")
    else:
        sigma = float(np.std(np.concatenate(omega_resids), ddof=1))

    def maxop(values: np.ndarray) -> float:
        return column_max(values, cfg.two_sided)

    training_maxima = np.array([maxop(t_ex[:, i]) for i in range(ell)])

    if cfg.shift_override is not None:
        mu = float(cfg.shift_override)
    elif cfg.shift_estimator == "residual-sup":
        mu = max(maxop(t_ex[:, i] - basis.matrix @ fits[:, i]) for i in range(ell))
    else:  # max-gap
        gaps = []
        for i in range(ell):
            synth = basis.matrix @ fits[:, i]
            synth = synth + stream(cfg.seed, SHIFT_GAP, i).standard_normal(v) * sigma
            gaps.append(training_maxima[i] - maxop(synth))
        mu = float(np.mean(gaps))

    model = SubspaceModel(
        basis=basis,
        residual_std=sigma,
        max_shift=mu,
        training_columns=ell,
        sample_rate=cfg.sample_rate,
        training_maxima=training_maxima,
        two_sided=cfg.two_sided,
        seed=cfg.seed,
        passes=tracked.passes,
        converged=tracked.converged,
    )
    return model, training_maxima, t_ex


def _recover_block(
    x: DataMatrix,
    model: SubspaceModel,
    plan: PermutationPlan,
    lo: int,
    hi: int,
    k: int,
    out: np.ndarray,
    eval_counter: list,
) -> None:
    v = x.voxels
    u = model.basis.matrix
    cnt = hi - lo
    n1 = x.n1
    omegas = np.empty((cnt, k), dtype=np.intp)
    block1 = np.empty((cnt, k, n1), dtype=np.float64)
    block2 = np.empty((cnt, k, x.n2), dtype=np.float64)
    rngs = []
    for j in range(cnt):
        i = lo + j
        rng = stream(model.seed, RECOVER_OMEGA, i)
        rngs.append(rng)
        omegas[j] = np.sort(rng.choice(v, size=k, replace=False))
        order = plan.shuffle(i)
        rows = x.values[omegas[j]]
        block1[j] = rows[:, order[:n1]]
        block2[j] = rows[:, order[n1:]]
    # one batched kernel call; rows reshaped, so values match per-column
    # tstat_subset bit for bit
    stats = _welch_rows(
        block1.reshape(-1, n1), block2.reshape(-1, x.n2)
    ).reshape(cnt, k)
    evals = cnt * k

    coeffs, conds = solve_block(u[omegas], stats)
    bad = np.flatnonzero(~np.isfinite(conds) | (conds > COND_LIMIT))
    for j in bad:
        i = lo + j
        order = plan.shuffle(i)
        ok = False
        last_cond = float(conds[j])
        for _ in range(_RESAMPLE_ATTEMPTS):
            idx = np.sort(rngs[j].choice(v, size=k, replace=False))
            rows = x.values[idx]
            vals = tstat_full(rows[:, order[: x.n1]], rows[:, order[x.n1:]])
            evals += k
            try:
                coeffs[j] = fit_coefficients(model.basis, ObservedColumn(idx, vals))
            except IllConditionedBasisError as e:
                last_cond = e.cond
                continue
            ok = True
            break
        if not ok:
            raise NumericalError(
                f"permutation {i}: restricted basis stayed ill-conditioned "
                f"(last condition number {last_cond:.3e}) after "
                f"{_RESAMPLE_ATTEMPTS} observation resamples"
            )

    cols = coeffs @ u.T          # (cnt, v): row slices stay contiguous below
    for j in range(cnt):
        i = lo + j
        s = stream(model.seed, RESIDUAL, i).standard_normal(v)
        if model.residual_std != 1.0:
            s *= model.residual_std
        s += cols[j]
        out[i] = column_max(s, model.two_sided) + model.max_shift
    eval_counter.append(evals)


def recover(
    x: DataMatrix,
    model: SubspaceModel,
    plan: PermutationPlan,
    cfg: RunConfig,
) -> tuple[MaxNull, dict]:
    """Recovery phase: synthesize maxima for permutations ell..L-1 and splice
    in the unshifted training maxima."""
    cfg = cfg.resolve(x)
    ell = model.training_columns
    L = plan.count
    if ell >= L:
        raise UsageError(f"no columns to recover: training columns {ell} >= permutations {L}")
    v = x.voxels
    k = int(np.ceil(model.sample_rate * v))

    maxima = np.empty(L, dtype=np.float64)
    maxima[:ell] = model.training_maxima

    spans = [(lo, min(lo + _BLOCK, L)) for lo in range(ell, L, _BLOCK)]
    eval_counter: list = []
    nthreads = resolve_threads(cfg.threads)
    if nthreads == 1 or len(spans) == 1:
        for lo, hi in spans:
            _recover_block(x, model, plan, lo, hi, k, maxima, eval_counter)
    else:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            futs = [
                pool.submit(_recover_block, x, model, plan, lo, hi, k, maxima, eval_counter)
                for lo, hi in spans
            ]
            for f in futs:
                f.result()

    evals = int(sum(eval_counter))
    counters = {
        "subsampled_statistic_evaluations": evals,
        "recovery_columns": L - ell,
        "observed_rows_per_column": k,
        "resampled_evaluations": evals - k * (L - ell),
    }
    return MaxNull(maxima), counters


def run_rapid(x: DataMatrix, cfg: RunConfig) -> tuple[MaxNull, SubspaceModel, dict]:
    """Full accelerated run: train, then recover, with shared plan and seed."""
    cfg = cfg.resolve(x)
    plan = cfg.plan_for(x)
    t0 = time.perf_counter()
    model, _, _ = train(x, cfg)
    t1 = time.perf_counter()
    null, rec_counters = recover(x, model, plan, cfg)
    t2 = time.perf_counter()

    v = x.voxels
    counters = {
        "full_statistic_evaluations": v * model.training_columns,
        **rec_counters,
        "statistic_evaluations": v * model.training_columns
        + rec_counters["subsampled_statistic_evaluations"],
        "training_passes": model.passes,
        "training_converged": model.converged,
        "train_seconds": t1 - t0,
        "recover_seconds": t2 - t1,
        "total_seconds": t2 - t0,
    }
    return null, model, counters
