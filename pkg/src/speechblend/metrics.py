"""Similarity measures between a control and an assessed recording.

Seven measures are computed per pair: DTW distance, Pearson correlation,
Minkowski distance, edit distance on real sequences (EDR), edit distance
with real penalty (ERP), longest common subsequence length (LCSS), and
move-split-merge distance (MSM). Correlation and Minkowski need equal
lengths, so they run on DTW-aligned copies; the elastic measures consume
the raw sequences.

The dynamic programs keep two rolling rows, so memory is O(min(n, m)).
Inputs are assumed finite; file readers validate that at the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import BadParam, BandTooNarrow, EmptyInput, LengthMismatch, TooShort, ZeroVariance
from .signal import _is_effectively_constant, as_samples, dtw_align

FEATURE_NAMES = ("dtw", "corr", "minkowski", "edr", "erp", "lcss", "msm")


@dataclass(frozen=True)
class MetricParams:
    """Knobs for the per-pair feature vector."""

    minkowski_p: float = 2.0
    edr_epsilon: float = 0.25
    lcss_epsilon: float = 0.25
    erp_gap: float = 0.0
    msm_cost: float = 1.0
    dtw_band: int | None = None

    def __post_init__(self):
        if not np.isfinite(self.minkowski_p) or self.minkowski_p < 1:
            raise BadParam("minkowski_p must be a finite real >= 1")
        if not np.isfinite(self.edr_epsilon) or self.edr_epsilon < 0:
            raise BadParam("edr_epsilon must be a finite real >= 0")
        if not np.isfinite(self.lcss_epsilon) or self.lcss_epsilon < 0:
            raise BadParam("lcss_epsilon must be a finite real >= 0")
        if not np.isfinite(self.erp_gap):
            raise BadParam("erp_gap must be finite")
        if not np.isfinite(self.msm_cost) or self.msm_cost <= 0:
            raise BadParam("msm_cost must be a finite real > 0")
        if self.dtw_band is not None and self.dtw_band < 0:
            raise BadParam("dtw_band must be None or >= 0")


@dataclass(frozen=True)
class FeatureRow:
    """One paired comparison, in dataset column order, plus an optional label."""

    dtw: float
    corr: float
    minkowski: float
    edr: float
    erp: float
    lcss: float
    msm: float
    label: int | None = None

    def values(self) -> tuple[float, ...]:
        return (self.dtw, self.corr, self.minkowski, self.edr, self.erp, self.lcss, self.msm)


@njit(cache=True)
def _dtw(a, b, band):  # pragma: no cover - thin numba kernel
    n = len(a)
    m = len(b)
    prev = np.empty(m + 1)
    cur = np.empty(m + 1)
    prev[0] = 0.0
    for j in range(1, m + 1):
        prev[j] = np.inf
    for i in range(1, n + 1):
        cur[0] = np.inf
        lo = i - band
        hi = i + band
        for j in range(1, m + 1):
            if j < lo or j > hi:
                cur[j] = np.inf
                continue
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            if best == np.inf:
                cur[j] = np.inf
            else:
                cur[j] = abs(a[i - 1] - b[j - 1]) + best
        prev, cur = cur, prev
    return prev[m]


@njit(cache=True)
def _edr(a, b, eps):  # pragma: no cover - thin numba kernel
    n = len(a)
    m = len(b)
    prev = np.empty(m + 1, np.int64)
    cur = np.empty(m + 1, np.int64)
    for j in range(m + 1):
        prev[j] = j
    for i in range(1, n + 1):
        cur[0] = i
        for j in range(1, m + 1):
            match = 0 if abs(a[i - 1] - b[j - 1]) <= eps else 1
            best = prev[j - 1] + match
            if prev[j] + 1 < best:
                best = prev[j] + 1
            if cur[j - 1] + 1 < best:
                best = cur[j - 1] + 1
            cur[j] = best
        prev, cur = cur, prev
    return prev[m]


@njit(cache=True)
def _erp(a, b, gap):  # pragma: no cover - thin numba kernel
    n = len(a)
    m = len(b)
    prev = np.empty(m + 1)
    cur = np.empty(m + 1)
    prev[0] = 0.0
    for j in range(1, m + 1):
        prev[j] = prev[j - 1] + abs(b[j - 1] - gap)
    for i in range(1, n + 1):
        cur[0] = prev[0] + abs(a[i - 1] - gap)
        for j in range(1, m + 1):
            best = prev[j - 1] + abs(a[i - 1] - b[j - 1])
            other = prev[j] + abs(a[i - 1] - gap)
            if other < best:
                best = other
            other = cur[j - 1] + abs(b[j - 1] - gap)
            if other < best:
                best = other
            cur[j] = best
        prev, cur = cur, prev
    return prev[m]


@njit(cache=True)
def _lcss(a, b, eps):  # pragma: no cover - thin numba kernel
    n = len(a)
    m = len(b)
    prev = np.zeros(m + 1, np.int64)
    cur = np.zeros(m + 1, np.int64)
    for i in range(1, n + 1):
        cur[0] = 0
        for j in range(1, m + 1):
            if abs(a[i - 1] - b[j - 1]) <= eps:
                cur[j] = prev[j - 1] + 1
            elif prev[j] >= cur[j - 1]:
                cur[j] = prev[j]
            else:
                cur[j] = cur[j - 1]
        prev, cur = cur, prev
    return prev[m]


@njit(cache=True)
def _msm_move_cost(x, y, z, c):  # pragma: no cover - thin numba kernel
    if (y <= x <= z) or (y >= x >= z):
        return c
    d1 = abs(x - y)
    d2 = abs(x - z)
    return c + (d1 if d1 < d2 else d2)


@njit(cache=True)
def _msm(a, b, c):  # pragma: no cover - thin numba kernel
    n = len(a)
    m = len(b)
    prev = np.empty(m + 1)
    cur = np.empty(m + 1)
    # row i=1
    prev[1] = abs(a[0] - b[0])
    for j in range(2, m + 1):
        prev[j] = prev[j - 1] + _msm_move_cost(b[j - 1], b[j - 2], a[0], c)
    for i in range(2, n + 1):
        cur[1] = prev[1] + _msm_move_cost(a[i - 1], a[i - 2], b[0], c)
        for j in range(2, m + 1):
            best = prev[j - 1] + abs(a[i - 1] - b[j - 1])
            other = prev[j] + _msm_move_cost(a[i - 1], a[i - 2], b[j - 1], c)
            if other < best:
                best = other
            other = cur[j - 1] + _msm_move_cost(b[j - 1], b[j - 2], a[i - 1], c)
            if other < best:
                best = other
            cur[j] = best
        prev, cur = cur, prev
    return prev[m]


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    return as_samples(a), as_samples(b)


def _shorter_inner(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # every elastic measure here is symmetric; keep the rolling rows short
    if len(b) > len(a):
        return b, a
    return a, b


def dtw_distance(a, b, band: int | None = None) -> float:
    """DTW distance with absolute-difference local cost.

    ``band`` is a Sakoe-Chiba half-width on |i - j|; None means unbanded.
    A band narrower than the length difference admits no path.
    """
    xa, xb = _pair(a, b)
    if len(xa) == 0 or len(xb) == 0:
        raise EmptyInput("dtw_distance requires non-empty sequences")
    if band is not None:
        if band < 0:
            raise BadParam("band must be >= 0")
        if band < abs(len(xa) - len(xb)):
            raise BandTooNarrow(
                f"band {band} < length difference {abs(len(xa) - len(xb))}"
            )
    xa, xb = _shorter_inner(xa, xb)
    effective = band if band is not None else len(xa) + len(xb)
    return float(_dtw(xa, xb, effective))


def minkowski_distance(a, b, p: float = 2.0) -> float:
    """Order-p Minkowski distance between equal-length sequences."""
    xa, xb = _pair(a, b)
    if not np.isfinite(p) or p < 1:
        raise BadParam("p must be a finite real >= 1")
    if len(xa) != len(xb):
        raise LengthMismatch(f"lengths differ: {len(xa)} vs {len(xb)}")
    if len(xa) == 0:
        raise EmptyInput("minkowski_distance requires non-empty sequences")
    return float(np.sum(np.abs(xa - xb) ** p) ** (1.0 / p))


def correlation(a, b) -> float:
    """Sample Pearson correlation, clamped to [-1, 1]."""
    xa, xb = _pair(a, b)
    if len(xa) != len(xb):
        raise LengthMismatch(f"lengths differ: {len(xa)} vs {len(xb)}")
    if len(xa) < 2:
        raise TooShort("correlation needs at least 2 samples")
    if _is_effectively_constant(xa) or _is_effectively_constant(xb):
        raise ZeroVariance("correlation undefined for a constant sequence")
    da = xa - xa.mean()
    db = xb - xb.mean()
    r = float(np.dot(da, db) / np.sqrt(np.dot(da, da) * np.dot(db, db)))
    return min(1.0, max(-1.0, r))


def edr(a, b, epsilon: float = 0.25) -> int:
    """Edit distance on real sequences: mismatch iff |a_i - b_j| > epsilon."""
    if not np.isfinite(epsilon) or epsilon < 0:
        raise BadParam("epsilon must be a finite real >= 0")
    xa, xb = _pair(a, b)
    if len(xa) == 0 or len(xb) == 0:
        return max(len(xa), len(xb))
    xa, xb = _shorter_inner(xa, xb)
    return int(_edr(xa, xb, epsilon))


def erp(a, b, gap: float = 0.0) -> float:
    """Edit distance with real penalty against a fixed gap value."""
    if not np.isfinite(gap):
        raise BadParam("gap must be finite")
    xa, xb = _pair(a, b)
    if len(xa) == 0 and len(xb) == 0:
        return 0.0
    if len(xa) == 0:
        return float(np.sum(np.abs(xb - gap)))
    if len(xb) == 0:
        return float(np.sum(np.abs(xa - gap)))
    xa, xb = _shorter_inner(xa, xb)
    return float(_erp(xa, xb, gap))


def lcss_length(a, b, epsilon: float = 0.25) -> int:
    """Longest common subsequence length with tolerance-based matching."""
    if not np.isfinite(epsilon) or epsilon < 0:
        raise BadParam("epsilon must be a finite real >= 0")
    xa, xb = _pair(a, b)
    if len(xa) == 0 or len(xb) == 0:
        return 0
    xa, xb = _shorter_inner(xa, xb)
    return int(_lcss(xa, xb, epsilon))


def msm(a, b, cost: float = 1.0) -> float:
    """Move-split-merge distance with split/merge base cost ``cost``."""
    if not np.isfinite(cost) or cost <= 0:
        raise BadParam("cost must be a finite real > 0")
    xa, xb = _pair(a, b)
    if len(xa) == 0 or len(xb) == 0:
        raise EmptyInput("msm requires non-empty sequences")
    xa, xb = _shorter_inner(xa, xb)
    return float(_msm(xa, xb, cost))


def feature_vector(control, assessed, params: MetricParams | None = None) -> FeatureRow:
    """All seven measures for one control/assessed pair.

    DTW, ERP and MSM run on the raw sequences. Minkowski and correlation run
    on DTW-aligned copies. EDR is normalized by the longer raw length and
    LCSS by the shorter, so both land in [0, 1]. The label is left unset.
    """
    if params is None:
        params = MetricParams()
    xa, xb = _pair(control, assessed)
    dtw_value = dtw_distance(xa, xb, band=params.dtw_band)
    aligned_a, aligned_b = dtw_align(xa, xb)
    return FeatureRow(
        dtw=dtw_value,
        corr=correlation(aligned_a, aligned_b),
        minkowski=minkowski_distance(aligned_a, aligned_b, p=params.minkowski_p),
        edr=edr(xa, xb, epsilon=params.edr_epsilon) / max(len(xa), len(xb)),
        erp=erp(xa, xb, gap=params.erp_gap),
        lcss=lcss_length(xa, xb, epsilon=params.lcss_epsilon) / min(len(xa), len(xb)),
        msm=msm(xa, xb, cost=params.msm_cost),
        label=None,
    )
