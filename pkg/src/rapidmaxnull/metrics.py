"""Accuracy benchmarks between two max-null distributions: KL divergence on a
shared binning, threshold comparison tables, and the resampling risk of two
rejection sets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import UsageError
from .model import MaxNull
from .teststat import threshold_at

DEFAULT_BINS = 100


@dataclass(frozen=True)
class HistogramPair:
    """Two probability vectors over shared bin edges, smoothed and normalized."""

    edges: np.ndarray
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        for name, vec in (("p", self.p), ("q", self.q)):
            if (vec < 0).any():
                raise UsageError(f"histogram {name} has negative mass")
            if abs(vec.sum() - 1.0) > 1e-12:
                raise UsageError(f"histogram {name} does not sum to 1")


def build_histogram_pair(a: MaxNull, b: MaxNull, bins: int = DEFAULT_BINS) -> HistogramPair:
    """Shared equal-width bins over the pooled range, with additive smoothing
    of 1/(10 L) per distribution before normalizing."""
    if bins < 2:
        raise UsageError(f"need at least 2 bins, got {bins}")
    am, bm = a.maxima, b.maxima
    lo = min(am.min(), bm.min())
    hi = max(am.max(), bm.max())
    if lo == hi:                       # degenerate: all values identical
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    ca, _ = np.histogram(am, bins=edges)
    cb, _ = np.histogram(bm, bins=edges)
    eps_a = 1.0 / (10.0 * am.size)
    eps_b = 1.0 / (10.0 * bm.size)
    p = (ca + eps_a) / (am.size + bins * eps_a)
    q = (cb + eps_b) / (bm.size + bins * eps_b)
    p /= p.sum()
    q /= q.sum()
    return HistogramPair(edges=edges, p=p, q=q)


def kl_divergence(a: MaxNull, b: MaxNull, bins: int = DEFAULT_BINS) -> float:
    """KL(a || b); callers pass the reference distribution first."""
    h = build_histogram_pair(a, b, bins)
    return float(np.sum(h.p * np.log(h.p / h.q)))


@dataclass(frozen=True)
class ThresholdRow:
    alpha: float
    tau_a: float
    tau_b: float
    percent_difference: Optional[float]   # None when the reference threshold is 0


def threshold_table(a: MaxNull, b: MaxNull, alphas: Sequence[float]) -> list[ThresholdRow]:
    """Per-alpha thresholds of both nulls with 100*|tau_a - tau_b|/|tau_b|,
    treating `b` as the reference."""
    rows = []
    for alpha in alphas:
        ta = threshold_at(a, alpha)
        tb = threshold_at(b, alpha)
        pct = None if tb == 0.0 else 100.0 * abs(ta - tb) / abs(tb)
        rows.append(ThresholdRow(alpha=alpha, tau_a=ta, tau_b=tb, percent_difference=pct))
    return rows


@dataclass(frozen=True)
class RiskResult:
    """Resampling risk plus the cardinalities that contextualize it; `risk`
    is None when either rejection set is empty (reported as a distinguished
    no-rejections outcome rather than a number)."""

    n_a: int
    n_b: int
    n_common: int
    risk: Optional[float]

    @property
    def defined(self) -> bool:
        return self.risk is not None


def resampling_risk(r1: np.ndarray, r2: np.ndarray) -> RiskResult:
    """Probability proxy that two procedures disagree on accept/reject:
    ((v1-vc)/v1 + (v2-vc)/v2)/2 over the two rejection index sets."""
    s1 = set(np.asarray(r1).tolist())
    s2 = set(np.asarray(r2).tolist())
    v1, v2 = len(s1), len(s2)
    vc = len(s1 & s2)
    if v1 == 0 or v2 == 0:
        return RiskResult(n_a=v1, n_b=v2, n_common=vc, risk=None)
    risk = ((v1 - vc) / v1 + (v2 - vc) / v2) / 2.0
    return RiskResult(n_a=v1, n_b=v2, n_common=vc, risk=float(risk))
