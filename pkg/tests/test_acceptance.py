"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criteria 2 and 3 encode the headline fidelity targets for the standard
20000x30 simulated dataset.  See /root/notes (outside the package) for the
analysis of the regime where the low-rank-plus-Gaussian residual model can
and cannot reach them.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from rapidmaxnull import (
    DataMatrix,
    RunConfig,
    SimSpec,
    gen_sim2,
    init_basis,
    kl_divergence,
    min_sample_rate,
    resampling_risk,
    run_naive,
    run_rapid,
    threshold_table,
    track_update,
    train_basis,
    tstat_full,
    tstat_subset,
)
from rapidmaxnull.lrmc import ObservedColumn, fit_coefficients
from rapidmaxnull.streams import SHUFFLE, stream

from conftest import SEED


def _report(criterion: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")


# ----------------------------------------------------------------------
# 1. Oracle equivalence
# ----------------------------------------------------------------------

def test_criterion_1_oracle_equivalence():
    g = np.random.default_rng(101)
    x = DataMatrix(g.standard_normal((50, 6)), 3, 3)
    plan_seed, L = 42, 200
    cfg = RunConfig(permutations=L, seed=plan_seed, engine="naive")
    t0 = time.perf_counter()
    null, _, _ = run_naive(x, cfg.plan_for(x))

    # independent brute force: regenerate shuffles from the documented stream
    # contract and evaluate the statistic voxel by voxel
    expected = np.empty(L)
    for i in range(L):
        order = np.arange(6) if i == 0 else stream(plan_seed, SHUFFLE, i).permutation(6)
        best = -np.inf
        for voxel in range(50):
            a = np.ascontiguousarray(x.values[voxel, order[:3]])
            b = np.ascontiguousarray(x.values[voxel, order[3:]])
            t = (np.mean(a) - np.mean(b)) / np.sqrt(
                np.var(a, ddof=1) / 3 + np.var(b, ddof=1) / 3
            )
            best = max(best, t)
        expected[i] = best
    elapsed = time.perf_counter() - t0

    exact = np.array_equal(null.maxima, expected)
    _report("criterion 1 (oracle equivalence)",
            exact and elapsed < 1.0,
            f"exact float equality={exact}, runtime {elapsed:.2f}s")
    assert exact
    assert elapsed < 1.0


# ----------------------------------------------------------------------
# 2 & 3. Fidelity on the standard simulated dataset
# ----------------------------------------------------------------------

def test_criterion_2_kl_fidelity(sim1_naive_10k, sim1_rapid_10k):
    naive_null, _ = sim1_naive_10k
    rapid_null, _, _ = sim1_rapid_10k
    kl = kl_divergence(naive_null, rapid_null)
    ok = kl < 1e-2
    _report("criterion 2 (KL fidelity)", ok, f"KL(naive||rapid) = {kl:.4f}, target < 0.01")
    assert ok, (
        f"KL(naive||rapid) = {kl:.4f} >= 1e-2 on the i.i.d. 20000x30 dataset. "
        f"This tracks a structural property of the data, not a tuning gap: the "
        f"exhaustive max null carries heavy-tailed extreme-value dispersion from "
        f"the 28-df statistic denominators that a fixed-rank basis plus an "
        f"i.i.d. Gaussian residual cannot reproduce (grid search over the "
        f"residual scale and shift with an oracle basis floors near KL ~ 0.17 "
        f"at this bin count). See the decisions ledger for the full analysis."
    )


def test_criterion_3_threshold_fidelity(sim1_naive_10k, sim1_rapid_10k):
    naive_null, _ = sim1_naive_10k
    rapid_null, _, _ = sim1_rapid_10k
    rows = threshold_table(rapid_null, naive_null, [0.05, 0.01])
    detail = ", ".join(
        f"alpha={r.alpha}: |{r.tau_a:.4f}-{r.tau_b:.4f}| = {r.percent_difference:.3f}%"
        for r in rows
    )
    ok = all(r.percent_difference < 0.1 for r in rows)
    _report("criterion 3 (threshold fidelity)", ok, detail + ", target < 0.1%")
    assert ok, (
        f"t-threshold differences {detail} exceed 0.1%. Same root cause as "
        f"criterion 2 (see the decisions ledger): the recovered null cannot "
        f"carry the per-permutation extreme-value dispersion of the i.i.d. "
        f"data's max null, so upper quantiles disagree at the percent scale."
    )


# ----------------------------------------------------------------------
# 4. Failure regime below the sampling floor
# ----------------------------------------------------------------------

def test_criterion_4_failure_regime(sim1, sim1_naive_10k):
    x, _ = sim1
    naive_null, _ = sim1_naive_10k
    eta = min_sample_rate(x.voxels, x.subjects) / 4.0
    cfg = RunConfig(permutations=10000, seed=SEED, engine="rapid", sample_rate=eta)
    null, _, _ = run_rapid(x, cfg)
    kl = kl_divergence(naive_null, null)
    ok = kl > 1e-1
    _report("criterion 4 (failure below the sampling floor)", ok,
            f"KL at eta_min/4 = {kl:.4f}, target > 0.1")
    assert ok


# ----------------------------------------------------------------------
# 5. Resampling-risk arithmetic
# ----------------------------------------------------------------------

def test_criterion_5_resampling_risk_values():
    first = resampling_risk(np.arange(59), np.arange(71)).risk
    second = resampling_risk(np.arange(2158), np.arange(2241)).risk
    ok = abs(first - 0.0845) <= 5e-4 and abs(second - 0.0185) <= 5e-4
    _report("criterion 5 (resampling-risk arithmetic)", ok,
            f"risk(59,71|59)={first:.5f}, risk(2158,2241|2158)={second:.5f}")
    assert abs(first - 0.0845) <= 5e-4
    assert abs(second - 0.0185) <= 5e-4


# ----------------------------------------------------------------------
# 6. Exact-rank recovery
# ----------------------------------------------------------------------

def test_criterion_6_exact_rank_recovery():
    v, r, L, k = 5000, 10, 500, 40
    g = np.random.default_rng(606)
    u_true = np.linalg.qr(g.standard_normal((v, r)))[0]
    t = u_true @ g.standard_normal((r, L))

    result = train_basis(t, k=k, rank=r, seed=607, max_passes=500, tolerance=1e-9)
    basis = result.basis

    omega_rng = np.random.default_rng(608)
    worst = 0.0
    for i in range(L):
        idx = np.sort(omega_rng.choice(v, size=k, replace=False))
        w = fit_coefficients(basis, ObservedColumn(idx, t[idx, i]))
        err = np.linalg.norm(basis.matrix @ w - t[:, i]) / np.linalg.norm(t[:, i])
        worst = max(worst, err)
    ok = worst < 1e-6
    _report("criterion 6 (exact-rank recovery)", ok,
            f"worst per-column relative error {worst:.2e} after "
            f"{result.passes} training passes, target < 1e-6")
    assert ok


# ----------------------------------------------------------------------
# 7. Counter identities and measured speedup
# ----------------------------------------------------------------------

def test_criterion_7_counters_and_speedup(sim1):
    x, _ = sim1
    L = 20000
    cfg = RunConfig(permutations=L, seed=SEED, engine="rapid", threads=1)
    t0 = time.perf_counter()
    _, model, counters = run_rapid(x, cfg)
    rapid_seconds = time.perf_counter() - t0

    k = int(np.ceil(model.sample_rate * x.voxels))
    ell = model.training_columns
    expected_recovery = k * (L - ell)
    counter_ok = (
        counters["subsampled_statistic_evaluations"] == expected_recovery
        and counters["resampled_evaluations"] == 0
    )

    naive_evals = x.voxels * L
    eval_ratio = naive_evals / counters["statistic_evaluations"]

    t0 = time.perf_counter()
    run_naive(x, cfg.plan_for(x), threads=1)
    naive_seconds = time.perf_counter() - t0
    speedup = naive_seconds / rapid_seconds

    ok = counter_ok and eval_ratio > 10 and speedup > 5
    _report("criterion 7 (counters and speedup)", ok,
            f"recovery evaluations {counters['subsampled_statistic_evaluations']} "
            f"(expected {expected_recovery}), evaluation ratio {eval_ratio:.1f} "
            f"(target > 10), wall-clock speedup {speedup:.1f}x "
            f"({naive_seconds:.1f}s vs {rapid_seconds:.1f}s, target > 5x)")
    assert counter_ok
    assert eval_ratio > 10
    assert speedup > 5


# ----------------------------------------------------------------------
# 8. Signal-insensitivity sweep
# ----------------------------------------------------------------------

def test_criterion_8_signal_insensitivity():
    kls = {}
    for mu in (1.0, 5.0):
        for sparsity in (0.01, 0.05):
            spec = SimSpec(n=60, v=20000, effect_mu=mu, sparsity=sparsity, seed=SEED)
            x, _ = gen_sim2(spec)
            cfg = RunConfig(permutations=5000, seed=SEED, engine="naive")
            naive_null, _, _ = run_naive(x, cfg.plan_for(x))
            rapid_null, _, _ = run_rapid(
                x, RunConfig(permutations=5000, seed=SEED, engine="rapid")
            )
            kls[(mu, sparsity)] = kl_divergence(naive_null, rapid_null)
    values = np.array(list(kls.values()))
    spread = values.max() / values.min()
    ok = bool(np.all(values < 1e-1) and spread <= 3.0)
    detail = ", ".join(f"mu={m},sp={s}: {v:.4f}" for (m, s), v in kls.items())
    _report("criterion 8 (signal insensitivity)", ok,
            f"{detail}; spread {spread:.2f}x (targets: all < 0.1, within 3x)")
    assert np.all(values < 1e-1), (
        f"KL values {detail} exceed 0.1; same structural regime as criterion 2 "
        f"(58-df statistic tails), see the decisions ledger."
    )
    assert spread <= 3.0


# ----------------------------------------------------------------------
# 9. Invariant suites
# ----------------------------------------------------------------------

def test_criterion_9_invariant_suites():
    # orthonormality drift across 1e4 tracked updates
    g = np.random.default_rng(909)
    basis = init_basis(300, 6, seed=910)
    for _ in range(10_000):
        idx = np.sort(g.choice(300, size=40, replace=False))
        track_update(basis, ObservedColumn(idx, g.standard_normal(40)), step=0.7)
    drift = basis.orthonormality_error()
    ortho_ok = drift <= 1e-8

    # group-swap antisymmetry, 100 random cases
    anti_ok = True
    for _ in range(100):
        x1 = g.standard_normal((30, 4))
        x2 = g.standard_normal((30, 4))
        anti_ok &= bool(np.array_equal(tstat_full(x1, x2), -tstat_full(x2, x1)))

    # restriction consistency, 100 random cases, exact equality
    restrict_ok = True
    for _ in range(100):
        v = int(g.integers(20, 120))
        x1 = g.standard_normal((v, 5))
        x2 = g.standard_normal((v, 6))
        idx = np.sort(g.choice(v, size=int(g.integers(1, v + 1)), replace=False))
        restrict_ok &= bool(
            np.array_equal(tstat_subset(x1, x2, idx), tstat_full(x1, x2)[idx])
        )

    # determinism across thread counts, 100 random cases per engine
    det_ok = True
    for case in range(100):
        data = DataMatrix(g.standard_normal((25, 6)), 3, 3)
        cfg = RunConfig(permutations=40, seed=9000 + case, engine="rapid",
                        training_columns=6, rank=4, sample_rate=0.6, max_passes=3,
                        threads=1)
        plan = cfg.plan_for(data)
        n1, _, _ = run_naive(data, plan, threads=1)
        n2, _, _ = run_naive(data, plan, threads=3)
        det_ok &= bool(np.array_equal(n1.maxima, n2.maxima))
        r1, _, _ = run_rapid(data, cfg)
        r2, _, _ = run_rapid(data, replace(cfg, threads=3))
        det_ok &= bool(np.array_equal(r1.maxima, r2.maxima))

    ok = ortho_ok and anti_ok and restrict_ok and det_ok
    _report("criterion 9 (invariant suites)", ok,
            f"orthonormality drift {drift:.2e} (<=1e-8): {ortho_ok}, "
            f"antisymmetry x100: {anti_ok}, restriction x100: {restrict_ok}, "
            f"thread determinism x100: {det_ok}")
    assert ortho_ok
    assert anti_ok
    assert restrict_ok
    assert det_ok
