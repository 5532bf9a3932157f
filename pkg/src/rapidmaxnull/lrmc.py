"""Online subspace estimation from sub-sampled columns, least-squares
completion, and singular-spectrum diagnostics.

The tracker follows the incremental-gradient scheme on the manifold of
orthonormal bases: fit coefficients on the observed rows, then rotate the
basis by a rank-one geodesic step mixing the prediction direction with the
zero-filled residual direction.  Exactly observed columns are fixed points,
and a zero step leaves the basis untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg
from scipy.linalg.blas import dger

from .errors import IllConditionedBasisError, UsageError
from .streams import BASIS_INIT, TRAIN_OMEGA, stream

COND_LIMIT = 1e12
ORTHO_DRIFT_LIMIT = 1e-8
_DRIFT_CHECK_INTERVAL = 64


class Basis:
    """Orthonormal v x r basis; mutated in place by tracking updates."""

    def __init__(self, matrix: np.ndarray, copy: bool = True):
        m = np.array(matrix, dtype=np.float64, copy=copy, order="C")
        if m.ndim != 2:
            raise UsageError("basis must be a 2-D matrix")
        self._m = m

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def voxels(self) -> int:
        return self._m.shape[0]

    @property
    def rank(self) -> int:
        return self._m.shape[1]

    def orthonormality_error(self) -> float:
        g = self._m.T @ self._m
        return float(np.abs(g - np.eye(self.rank)).max())

    def reorthonormalize(self) -> None:
        self._m = np.ascontiguousarray(np.linalg.qr(self._m)[0])

    def copy(self) -> "Basis":
        return Basis(self._m, copy=True)


@dataclass(frozen=True)
class ObservedColumn:
    """The observed slice of one statistic column: k distinct sorted rows."""

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices)
        vals = np.asarray(self.values, dtype=np.float64)
        if idx.ndim != 1 or vals.ndim != 1 or idx.size != vals.size:
            raise UsageError("indices and values must be 1-D and equally long")
        if idx.size == 0:
            raise UsageError("observed column is empty")
        if np.any(np.diff(idx) <= 0):
            raise UsageError("indices must be strictly increasing (sorted, distinct)")
        if idx[0] < 0:
            raise UsageError("negative row index")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", vals)

    @property
    def size(self) -> int:
        return self.indices.size


def init_basis(v: int, r: int, seed: int) -> Basis:
    """Orthonormal basis from the QR of a seeded Gaussian draw."""
    if r > v:
        raise UsageError(f"rank {r} exceeds dimension {v}")
    if r < 1:
        raise UsageError("rank must be >= 1")
    g = stream(seed, BASIS_INIT)
    q = np.linalg.qr(g.standard_normal((v, r)))[0]
    return Basis(q, copy=False)


def _gram_fit(u_o: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, float]:
    """Normal-equations fit with the exact condition number of `u_o`."""
    gram = u_o.T @ u_o
    lam = np.linalg.eigvalsh(gram)
    cond = np.inf if lam[0] <= 0.0 else float(np.sqrt(lam[-1] / lam[0]))
    if cond > COND_LIMIT:
        raise IllConditionedBasisError(cond)
    w = np.linalg.solve(gram, u_o.T @ values)
    return w, cond


def fit_coefficients(b: Basis, col: ObservedColumn) -> np.ndarray:
    """Least-squares coefficients on the observed rows.

    Solved through the SVD (rank-revealing); a restricted basis with
    condition number above 1e12 raises so the caller can resample.
    """
    if col.size < b.rank:
        raise UsageError(
            f"{col.size} observed rows cannot determine {b.rank} coefficients"
        )
    if col.indices[-1] >= b.voxels:
        raise UsageError("observed row index outside the basis")
    u_o = b.matrix[col.indices]
    w, _, _, sv = np.linalg.lstsq(u_o, col.values, rcond=None)
    cond = np.inf if sv[-1] == 0.0 else float(sv[0] / sv[-1])
    if cond > COND_LIMIT:
        raise IllConditionedBasisError(cond)
    return w


def solve_block(u_stack: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched least-squares fits for a block of observed columns.

    `u_stack` is (B, k, r) restricted bases, `values` is (B, k).  Returns the
    (B, r) coefficients and the per-column condition numbers of the
    restricted bases (from the exact eigenvalues of the normal matrix).
    Dedicated batched path for the recovery hot loop; agrees with
    `fit_coefficients` to solver precision on well-conditioned columns.
    """
    gram = np.matmul(u_stack.transpose(0, 2, 1), u_stack)
    rhs = np.matmul(u_stack.transpose(0, 2, 1), values[..., None])
    lam = np.linalg.eigvalsh(gram)
    lo, hi = lam[:, 0], lam[:, -1]
    with np.errstate(divide="ignore", invalid="ignore"):
        conds = np.sqrt(np.where(lo > 0, hi / lo, np.inf))
    bad = ~np.isfinite(conds) | (conds > COND_LIMIT)
    if bad.any():
        safe = gram.copy()
        safe[bad] = np.eye(gram.shape[-1])
        w = np.linalg.solve(safe, rhs)[..., 0]
    else:
        w = np.linalg.solve(gram, rhs)[..., 0]
    return w, conds


def complete_column(b: Basis, w: np.ndarray) -> np.ndarray:
    """Full column synthesized from the basis and coefficients."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (b.rank,):
        raise UsageError(f"coefficients must have shape ({b.rank},), got {w.shape}")
    return b.matrix @ w


def track_update(b: Basis, col: ObservedColumn, step: float) -> tuple[Basis, float]:
    """One incremental-gradient update from a sub-sampled column.

    Mutates and returns the basis; the second value is the pre-update fit
    residual norm on the observed rows.  The rotation angle is the step
    multiple of the greedy angle atan(||residual|| / ||prediction||); step 0
    is an exact no-op and an exactly-spanned column is a fixed point.
    """
    if col.size < b.rank:
        raise UsageError(
            f"{col.size} observed rows cannot determine {b.rank} coefficients"
        )
    if col.indices[-1] >= b.voxels:
        raise UsageError("observed row index outside the basis")
    u = b.matrix
    w, _ = _gram_fit(u[col.indices], col.values)
    resid = col.values - u[col.indices] @ w
    resid_norm = float(np.linalg.norm(resid))
    if step == 0.0 or resid_norm == 0.0:
        return b, resid_norm
    pred = u @ w
    pred_norm = float(np.linalg.norm(pred))
    w_norm = float(np.linalg.norm(w))
    if pred_norm == 0.0 or w_norm == 0.0:
        return b, resid_norm
    if resid_norm <= 1e-14 * max(1.0, pred_norm):
        return b, resid_norm
    theta = step * np.arctan(resid_norm / pred_norm)
    direction = (np.cos(theta) - 1.0) / pred_norm * pred
    direction[col.indices] += np.sin(theta) / resid_norm * resid
    # rank-one update without the outer-product temporary: u.T is an
    # F-contiguous view, so BLAS applies u += direction * w_scaled^T in place
    dger(1.0, w / w_norm, direction, a=u.T, overwrite_a=1)
    return b, resid_norm


@dataclass
class TrainingResult:
    """Basis after the pass loop plus what the final pass observed."""

    basis: Basis
    passes: int
    updates: int
    pass_residuals: list = field(default_factory=list)
    final_omegas: list | None = None   # per-column observed rows of the last pass
    converged: bool = False


def train_basis(
    t_ex: np.ndarray,
    k: int,
    rank: int,
    seed: int,
    max_passes: int = 50,
    tolerance: float = 1e-3,
    resample_attempts: int = 5,
) -> TrainingResult:
    """Repeated sub-sampled tracking passes over the training columns.

    Each pass visits every column once with a fresh observed-row draw from
    `stream(seed, TRAIN_OMEGA, column, pass)`; the step decays as
    1/(1 + t/tau) with tau = ell*max_passes/2.  Stops when the mean relative
    fit residual of a pass drops below `tolerance`.
    """
    v, ell = t_ex.shape
    if k < rank:
        raise UsageError(f"{k} observed rows per update cannot identify rank {rank}")
    if k > v:
        raise UsageError(f"observed rows {k} exceed voxel count {v}")
    basis = init_basis(v, rank, seed)
    tau = ell * max_passes / 2.0
    t = 0
    result = TrainingResult(basis=basis, passes=0, updates=0)
    for p in range(max_passes):
        rel_sum = 0.0
        omegas: list[np.ndarray] = []
        for i in range(ell):
            omega_rng = stream(seed, TRAIN_OMEGA, i, p)
            step = 1.0 / (1.0 + t / tau)
            updated = False
            for _ in range(resample_attempts):
                idx = np.sort(omega_rng.choice(v, size=k, replace=False))
                col = ObservedColumn(idx, t_ex[idx, i])
                try:
                    basis, resid_norm = track_update(basis, col, step)
                except IllConditionedBasisError:
                    continue
                updated = True
                break
            if not updated:
                raise IllConditionedBasisError(np.inf)
            t += 1
            norm_b = float(np.linalg.norm(col.values))
            rel_sum += resid_norm / norm_b if norm_b > 0 else 0.0
            omegas.append(col.indices)
            if t % _DRIFT_CHECK_INTERVAL == 0 and basis.orthonormality_error() > ORTHO_DRIFT_LIMIT:
                basis.reorthonormalize()
        rel = rel_sum / ell
        result.pass_residuals.append(rel)
        result.passes = p + 1
        result.updates = t
        result.final_omegas = omegas
        if rel < tolerance:
            result.converged = True
            break
    if basis.orthonormality_error() > ORTHO_DRIFT_LIMIT:
        basis.reorthonormalize()
    result.basis = basis
    return result


def spectrum(t: np.ndarray, k: int) -> np.ndarray:
    """Leading k singular values of a materialized statistic matrix.

    Uses an iterative solver when k is small relative to the matrix and a
    dense decomposition otherwise; values are nonincreasing.
    """
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 2:
        raise UsageError("spectrum needs a 2-D matrix")
    smallest = min(t.shape)
    if not 1 <= k <= smallest:
        raise UsageError(f"k must be in [1, {smallest}], got {k}")
    if k < smallest - 1 and smallest > 40:
        sv = scipy.sparse.linalg.svds(t, k=k, return_singular_vectors=False)
        sv = np.sort(sv)[::-1]
    else:
        sv = np.linalg.svd(t, compute_uv=False)[:k]
    return np.maximum(sv, 0.0)


def min_sample_rate(v: int, n: int) -> float:
    """Smallest viable per-column sampling rate, n*ln(v)/v clamped to (0, 1].

    The recommended operating rate is twice this value.
    """
    if v <= 1:
        raise UsageError("needs more than one voxel")
    return float(min(n * np.log(v) / v, 1.0))
