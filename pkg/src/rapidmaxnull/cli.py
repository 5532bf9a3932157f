"""Command-line harness: dataset generation, engine runs with machine-readable
reports, hyperparameter sweeps, run comparison, and spectrum dumps.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import DataFormatError, NumericalError, UsageError
from .lrmc import min_sample_rate, spectrum
from .matio import (
    load_matrix,
    read_array,
    write_array,
    write_matrix,
    write_matrix_csv,
)
from .metrics import DEFAULT_BINS, kl_divergence, resampling_risk, threshold_table
from .model import DataMatrix, MaxNull, RunConfig
from .naive import DEFAULT_MEM_CAP_BYTES, resolve_threads, run_naive
from .rapid import run_rapid
from .simgen import SimSpec, gen_sim1, gen_sim2
from .teststat import stat_map, threshold_at

# paper-style default sweep grid (simulation scale)
SWEEP_ETA_DEFAULT = (0.005, 0.01, 0.016, 0.02, 0.04, 0.08, 0.16, 0.32, 0.64)
SWEEP_ELL_DEFAULT = ("n/3", "n", "2n")


def _parse_alphas(text: str) -> list[float]:
    try:
        alphas = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as e:
        raise UsageError(f"bad alpha list {text!r}") from e
    if not alphas:
        raise UsageError("empty alpha list")
    return alphas


def _parse_ell(token, n: int) -> int:
    """Accept integers or the n-relative forms 'n', '2n', 'n/3', '3n/4'."""
    if isinstance(token, int):
        return token
    text = str(token).strip().replace(" ", "")
    if text.isdigit():
        return int(text)
    if "n" not in text:
        raise UsageError(f"cannot parse training column count {token!r}")
    left, _, right = text.partition("n")
    mult = float(left) if left else 1.0
    div = 1.0
    if right:
        if not right.startswith("/"):
            raise UsageError(f"cannot parse training column count {token!r}")
        div = float(right[1:])
    return max(1, round(mult * n / div))


def _write_json(path, payload) -> None:
    with open(path, "w") as f:
        json.dump(payload, f, indent=1)
        f.write("\n")


def _run_report(x: DataMatrix, cfg: RunConfig, input_path: str,
                mem_cap_bytes: int, dump_t: Optional[str],
                dump_model: Optional[str]) -> dict:
    resolved = cfg.resolve(x)
    plan = resolved.plan_for(x)
    report = {
        "engine": resolved.engine,
        "engine_version": __version__,
        "seed": resolved.seed,
        "config": {
            "input": str(input_path),
            "permutations": resolved.permutations,
            "two_sided": resolved.two_sided,
            "training_columns": resolved.training_columns,
            "sample_rate": resolved.sample_rate,
            "rank": resolved.rank,
            "max_passes": resolved.max_passes,
            "tolerance": resolved.tolerance,
            "shift_estimator": resolved.shift_estimator,
            "voxels": x.voxels,
            "subjects": x.subjects,
            "n1": x.n1,
            "n2": x.n2,
        },
        "eta_min": min_sample_rate(x.voxels, x.subjects) if x.voxels > 1 else 1.0,
    }
    if resolved.engine == "naive":
        t0 = time.perf_counter()
        null, mat, counters = run_naive(
            x, plan, materialize=dump_t is not None,
            two_sided=resolved.two_sided, threads=resolved.threads,
            mem_cap_bytes=mem_cap_bytes,
        )
        elapsed = time.perf_counter() - t0
        report["counters"] = counters
        report["timings"] = {"total_seconds": elapsed}
        if mat is not None:
            write_array(mat.values, dump_t)
            report["statistic_matrix"] = str(dump_t)
    else:
        null, model, counters = run_rapid(x, resolved)
        report["timings"] = {
            "train_seconds": counters.pop("train_seconds"),
            "recover_seconds": counters.pop("recover_seconds"),
            "total_seconds": counters.pop("total_seconds"),
        }
        report["counters"] = counters
        report["model"] = {
            "residual_std": model.residual_std,
            "max_shift": model.max_shift,
            "training_passes": model.passes,
            "training_converged": model.converged,
        }
        if dump_model:
            write_array(model.basis.matrix, f"{dump_model}.basis.mat0")
            _write_json(f"{dump_model}.model.json", {
                "residual_std": model.residual_std,
                "max_shift": model.max_shift,
                "training_columns": model.training_columns,
                "sample_rate": model.sample_rate,
                "rank": model.basis.rank,
                "seed": model.seed,
                "two_sided": model.two_sided,
                "training_maxima": model.training_maxima.tolist(),
                "basis_file": f"{dump_model}.basis.mat0",
            })
            report["model"]["dump_prefix"] = str(dump_model)
    report["maxima"] = null.maxima.tolist()
    return report


def _cmd_gen(args) -> int:
    if args.kind == "sim1":
        x, signal = gen_sim1(args.seed)
        spec = {"generator": "sim1", "n": x.subjects, "v": x.voxels,
                "n1": x.n1, "n2": x.n2, "effect_mu": 1.0, "sparsity": 0.01,
                "seed": args.seed}
    else:
        simspec = SimSpec(n=args.n, v=args.v, effect_mu=args.mu,
                          sparsity=args.sparsity, seed=args.seed)
        x, signal = gen_sim2(simspec)
        spec = {"generator": "sim2", **asdict(simspec), "n1": x.n1, "n2": x.n2}
    if str(args.out).lower().endswith(".csv"):
        write_matrix_csv(x, args.out)
    else:
        write_matrix(x, args.out)
    manifest = args.manifest or f"{args.out}.manifest.json"
    _write_json(manifest, {**spec, "signal_voxels": signal.tolist()})
    print(f"wrote {x.voxels}x{x.subjects} matrix to {args.out} (manifest: {manifest})")
    return 0


def _cmd_run(args) -> int:
    x = load_matrix(args.input)
    cfg = RunConfig(
        permutations=args.perms,
        seed=args.seed,
        engine=args.engine,
        two_sided=args.two_sided,
        training_columns=args.ell,
        sample_rate=args.eta,
        rank=args.rank,
        max_passes=args.max_passes,
        tolerance=args.tolerance,
        shift_estimator=args.shift_estimator,
        threads=args.threads,
    )
    mem_cap = int(args.mem_cap_gb * (1 << 30)) if args.mem_cap_gb else DEFAULT_MEM_CAP_BYTES
    report = _run_report(x, cfg, args.input, mem_cap, args.dump_t, args.dump_model)
    _write_json(args.out, report)
    c = report["counters"]
    print(
        f"{args.engine}: L={args.perms}, statistic evaluations "
        f"{c['statistic_evaluations']}, wall {report['timings']['total_seconds']:.2f}s, "
        f"report {args.out}"
    )
    return 0


def _load_report(path) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise DataFormatError(f"{path}: cannot read report ({e})") from e


def _compare_payload(rep_a: dict, rep_b: dict, alphas: Sequence[float], bins: int,
                     observed: Optional[np.ndarray]) -> dict:
    null_a = MaxNull(np.asarray(rep_a["maxima"]))
    null_b = MaxNull(np.asarray(rep_b["maxima"]))
    rows = threshold_table(null_b, null_a, alphas)   # a is the reference
    payload = {
        "reference": rep_a.get("engine", "a"),
        "candidate": rep_b.get("engine", "b"),
        "bins": bins,
        "kl_reference_candidate": kl_divergence(null_a, null_b, bins=bins),
        "kl_direction": "KL(reference || candidate)",
        "thresholds": [
            {
                "alpha": r.alpha,
                "tau_reference": r.tau_b,
                "tau_candidate": r.tau_a,
                "percent_difference": r.percent_difference,
            }
            for r in rows
        ],
    }
    if observed is not None:
        risks = []
        for alpha in alphas:
            ra = np.flatnonzero(observed >= threshold_at(null_a, alpha))
            rb = np.flatnonzero(observed >= threshold_at(null_b, alpha))
            res = resampling_risk(ra, rb)
            risks.append({
                "alpha": alpha,
                "risk": res.risk,
                "rejections_reference": res.n_a,
                "rejections_candidate": res.n_b,
                "rejections_common": res.n_common,
            })
        payload["resampling_risk"] = risks
    return payload


def _cmd_compare(args) -> int:
    rep_a = _load_report(args.a)
    rep_b = _load_report(args.b)
    alphas = _parse_alphas(args.alphas)
    observed = None
    input_path = args.input or rep_a.get("config", {}).get("input")
    if input_path and Path(input_path).exists():
        x = load_matrix(input_path)
        observed = stat_map(x)
        if rep_a.get("config", {}).get("two_sided"):
            observed = np.abs(observed)
    payload = _compare_payload(rep_a, rep_b, alphas, args.bins, observed)
    payload["a"] = str(args.a)
    payload["b"] = str(args.b)
    if observed is None:
        payload["resampling_risk"] = "input matrix unavailable; risk not computed"
    if args.out:
        _write_json(args.out, payload)
    print(json.dumps(payload, indent=1))
    return 0


def _cmd_spectrum(args) -> int:
    a, _, _ = read_array(args.input)
    sv = spectrum(a, args.k)
    with open(args.out, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["index", "singular_value"])
        for i, val in enumerate(sv):
            writer.writerow([i, format(val, ".17g")])
    print(f"wrote {len(sv)} singular values to {args.out}")
    return 0


def _sweep_cell(x: DataMatrix, args, L: int, eta: float, ell: int,
                ref_report: dict, alphas: list, out_dir: Path) -> dict:
    cfg = RunConfig(
        permutations=L, seed=args.seed, engine="rapid",
        training_columns=ell, sample_rate=eta,
        rank=min(x.subjects, ell), threads=1 if args.parallel_cells else args.threads,
        shift_estimator=args.shift_estimator,
    )
    cell_name = f"cell_L{L}_eta{eta:g}_ell{ell}"
    report = _run_report(x, cfg, args.input, DEFAULT_MEM_CAP_BYTES, None, None)
    report_path = out_dir / f"{cell_name}.json"
    _write_json(report_path, report)
    observed = stat_map(x)
    if cfg.two_sided:
        observed = np.abs(observed)
    payload = _compare_payload(ref_report, report, alphas, args.bins, observed)
    row = {
        "perms": L, "eta": eta, "ell": ell, "status": "ok",
        "kl": payload["kl_reference_candidate"],
        "evaluations": report["counters"]["statistic_evaluations"],
        "reference_evaluations": ref_report["counters"]["statistic_evaluations"],
        "train_seconds": report["timings"]["train_seconds"],
        "recover_seconds": report["timings"]["recover_seconds"],
        "report": str(report_path),
    }
    for t in payload["thresholds"]:
        a = t["alpha"]
        row[f"tau_ref_{a:g}"] = t["tau_reference"]
        row[f"tau_{a:g}"] = t["tau_candidate"]
        row[f"pct_diff_{a:g}"] = t["percent_difference"]
    for r in payload.get("resampling_risk", []):
        row[f"risk_{r['alpha']:g}"] = r["risk"]
        row[f"nreject_ref_{r['alpha']:g}"] = r["rejections_reference"]
        row[f"nreject_{r['alpha']:g}"] = r["rejections_candidate"]
    return row


def _cmd_sweep(args) -> int:
    x = load_matrix(args.input)
    n = x.subjects
    if args.grid:
        with open(args.grid) as f:
            grid = json.load(f)
    else:
        grid = {}
    perms = grid.get("perms", args.perms or [1000])
    etas = grid.get("eta", list(SWEEP_ETA_DEFAULT))
    ells = [_parse_ell(e, n) for e in grid.get("ell", list(SWEEP_ELL_DEFAULT))]
    alphas = grid.get("alphas", _parse_alphas(args.alphas))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    for L in perms:
        ref_cfg = RunConfig(permutations=L, seed=args.seed, engine="naive",
                            threads=args.threads)
        ref_report = _run_report(x, ref_cfg, args.input, DEFAULT_MEM_CAP_BYTES, None, None)
        ref_path = out_dir / f"reference_L{L}.json"
        _write_json(ref_path, ref_report)

        cells = [(L, eta, ell) for eta in etas for ell in ells]

        def run_cell(cell):
            L_, eta, ell = cell
            try:
                return _sweep_cell(x, args, L_, eta, ell, ref_report, alphas, out_dir)
            except (UsageError, NumericalError, DataFormatError) as e:
                return {"perms": L_, "eta": eta, "ell": ell,
                        "status": f"error: {e}", "kl": None}

        if args.parallel_cells:
            with ThreadPoolExecutor(max_workers=resolve_threads(args.threads)) as pool:
                rows.extend(pool.map(run_cell, cells))
        else:
            rows.extend(run_cell(c) for c in cells)

    summary = out_dir / "summary.csv"
    fieldnames: list[str] = []
    for row in rows:
        for key in row:
            if key not in fieldnames:
                fieldnames.append(key)
    with open(summary, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    print(f"swept {len(rows)} cells; summary at {summary}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rapidmaxnull",
        description="Max-statistic permutation testing: exhaustive and "
                    "subspace-accelerated engines",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate synthetic datasets")
    gen_sub = gen.add_subparsers(dest="kind", required=True)
    g1 = gen_sub.add_parser("sim1", help="20000x30 dataset, 1% signal of strength 1")
    g1.add_argument("--seed", type=int, required=True)
    g1.add_argument("--out", required=True)
    g1.add_argument("--manifest")
    g1.set_defaults(func=_cmd_gen)
    g2 = gen_sub.add_parser("sim2", help="one cell of the n x strength x sparsity grid")
    g2.add_argument("--n", type=int, required=True)
    g2.add_argument("--mu", type=float, required=True)
    g2.add_argument("--sparsity", type=float, required=True)
    g2.add_argument("--v", type=int, default=20000)
    g2.add_argument("--seed", type=int, required=True)
    g2.add_argument("--out", required=True)
    g2.add_argument("--manifest")
    g2.set_defaults(func=_cmd_gen)

    run = sub.add_parser("run", help="run one engine and write a JSON report")
    run.add_argument("--input", required=True)
    run.add_argument("--engine", choices=("naive", "rapid"), required=True)
    run.add_argument("--perms", type=int, required=True, help="permutation count L")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--eta", type=float, help="sub-sampling rate (default: 2x minimum)")
    run.add_argument("--ell", type=int, help="training column count (default: n)")
    run.add_argument("--rank", type=int, help="basis rank (default: n)")
    run.add_argument("--two-sided", action="store_true")
    run.add_argument("--threads", type=int)
    run.add_argument("--max-passes", type=int, default=50)
    run.add_argument("--tolerance", type=float, default=1e-3)
    run.add_argument("--shift-estimator", choices=("residual-sup", "max-gap"),
                     default="max-gap")
    run.add_argument("--dump-T", dest="dump_t", help="materialize the statistic matrix")
    run.add_argument("--dump-model", help="dump basis and model parameters (prefix)")
    run.add_argument("--mem-cap-gb", type=float)
    run.add_argument("--out", required=True)
    run.set_defaults(func=_cmd_run)

    sweep = sub.add_parser("sweep", help="hyperparameter grid against a naive reference")
    sweep.add_argument("--input", required=True)
    sweep.add_argument("--grid", help="JSON grid file (perms, eta, ell, alphas)")
    sweep.add_argument("--perms", type=int, nargs="*")
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--alphas", default="0.05,0.01")
    sweep.add_argument("--bins", type=int, default=DEFAULT_BINS)
    sweep.add_argument("--threads", type=int)
    sweep.add_argument("--shift-estimator", choices=("residual-sup", "max-gap"),
                       default="max-gap")
    sweep.add_argument("--parallel-cells", action="store_true")
    sweep.add_argument("--out", required=True)
    sweep.set_defaults(func=_cmd_sweep)

    cmp_ = sub.add_parser("compare", help="compare two run reports")
    cmp_.add_argument("--a", required=True, help="reference report")
    cmp_.add_argument("--b", required=True, help="candidate report")
    cmp_.add_argument("--alphas", default="0.05,0.01,0.001")
    cmp_.add_argument("--bins", type=int, default=DEFAULT_BINS)
    cmp_.add_argument("--input", help="data matrix for rejection-set risk")
    cmp_.add_argument("--out")
    cmp_.set_defaults(func=_cmd_compare)

    spec = sub.add_parser("spectrum", help="leading singular values of a dumped matrix")
    spec.add_argument("--input", required=True)
    spec.add_argument("-k", type=int, required=True)
    spec.add_argument("--out", required=True)
    spec.set_defaults(func=_cmd_spectrum)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except (DataFormatError, OSError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
