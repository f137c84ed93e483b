"""Mask shape metrics, the quality score, and the skewed outlier fence."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyMask, TooFewSamples
from .hull import convex_hull_mask

MIN_LUNG_DIMENSION = 300


@dataclass(frozen=True)
class MaskMetrics:
    """Ellipse eccentricity, major-axis orientation, area share, solidity."""

    eccentricity: float
    orientation_deg: float
    area_fraction: float
    solidity: float


@dataclass(frozen=True)
class QualityScore:
    value: float
    components: tuple


def mask_bbox(mask: np.ndarray):
    """Foreground bounding box (r0, r1, c0, c1) inclusive, or None."""
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0:
        return None
    return int(rows[0]), int(rows[-1]), int(cols[0]), int(cols[-1])


def mask_metrics(mask: np.ndarray) -> MaskMetrics:
    """Shape properties from central image moments of the full foreground."""
    coords = np.argwhere(mask)
    n = coords.shape[0]
    if n == 0:
        raise EmptyMask("metrics require at least one foreground pixel")
    y = coords[:, 0].astype(np.float64)  # rows
    x = coords[:, 1].astype(np.float64)  # columns
    mu20 = np.mean((x - x.mean()) ** 2)
    mu02 = np.mean((y - y.mean()) ** 2)
    mu11 = np.mean((x - x.mean()) * (y - y.mean()))
    half_trace = (mu20 + mu02) / 2.0
    spread = math.hypot((mu20 - mu02) / 2.0, mu11)
    lam1 = half_trace + spread
    lam2 = max(half_trace - spread, 0.0)
    if lam1 <= 0.0:
        eccentricity = 0.0
        orientation = 0.0
    else:
        eccentricity = math.sqrt(max(0.0, 1.0 - lam2 / lam1))
        orientation = math.degrees(0.5 * math.atan2(2.0 * mu11, mu20 - mu02))
    hull_area = int(convex_hull_mask(mask).sum())
    solidity = n / hull_area if hull_area else 1.0
    return MaskMetrics(
        eccentricity=float(np.clip(eccentricity, 0.0, 1.0)),
        orientation_deg=float(np.clip(orientation, -90.0, 90.0)),
        area_fraction=n / mask.size,
        solidity=float(np.clip(solidity, 0.0, 1.0)),
    )


def quality_score(m: MaskMetrics) -> QualityScore:
    """Arithmetic mean of the four normalized mask properties."""
    components = (
        m.eccentricity,
        1.0 - abs(m.orientation_deg) / 90.0,
        m.area_fraction,
        m.solidity,
    )
    return QualityScore(value=float(np.mean(components)), components=components)


def too_small_check(mask: np.ndarray, min_dim: int = MIN_LUNG_DIMENSION) -> bool:
    """Accept iff the foreground bounding box is at least min_dim on both sides."""
    bbox = mask_bbox(mask)
    if bbox is None:
        return False
    r0, r1, c0, c1 = bbox
    return (r1 - r0 + 1) >= min_dim and (c1 - c0 + 1) >= min_dim


def medcouple(values: np.ndarray, max_exact: int = 8192) -> float:
    """Robust skewness via the pairwise median kernel.

    Vectorized O(n^2) construction; above `max_exact` samples, the sorted
    array is decimated deterministically to bound the quadratic memory.
    Median ties use the signed rank kernel sign(i + j - (m + 1)).
    """
    y = np.sort(np.asarray(values, dtype=np.float64), axis=None)
    n = y.size
    if n < 3:
        return 0.0
    if n > max_exact:
        idx = np.linspace(0, n - 1, max_exact).round().astype(np.intp)
        y = y[idx]
        n = y.size
    med = y[(n - 1) // 2] if n % 2 else (y[n // 2 - 1] + y[n // 2]) / 2.0
    z = y - med
    lower = z[z <= 0.0]  # ascending, zeros last
    upper = z[z >= 0.0]  # ascending, zeros first
    up = upper[:, None]
    lo = lower[None, :]
    denom = up - lo
    safe = np.where(denom > 0.0, denom, 1.0)
    h = np.where(denom > 0.0, (up + lo) / safe, 0.0)
    m = int(np.count_nonzero(z == 0.0))
    if m:
        ii = np.arange(1, m + 1)[:, None]
        jj = np.arange(1, m + 1)[None, :]
        h[:m, lower.size - m:] = np.sign(ii + jj - (m + 1))
    return float(np.median(h))


def _lerp_quantile(sorted_values: np.ndarray, q: float) -> float:
    n = sorted_values.size
    pos = q * (n - 1)
    lo = int(math.floor(pos))
    hi = min(lo + 1, n - 1)
    frac = pos - lo
    return float(sorted_values[lo] * (1 - frac) + sorted_values[hi] * frac)


def skewed_outlier_threshold(scores) -> float:
    """Lower adjusted-boxplot fence for right/left-skewed score distributions.

    Q1 - 1.5 * exp(-4*MC) * IQR when the medcouple MC >= 0, else
    Q1 - 1.5 * exp(-3*MC) * IQR; values strictly below the fence are
    outliers. Quartiles use linear interpolation on the sorted sample.
    """
    s = np.sort(np.asarray(scores, dtype=np.float64), axis=None)
    if s.size < 4:
        raise TooFewSamples(f"need >= 4 scores, got {s.size}")
    q1 = _lerp_quantile(s, 0.25)
    q3 = _lerp_quantile(s, 0.75)
    iqr = q3 - q1
    mc = medcouple(s)
    factor = math.exp(-4.0 * mc) if mc >= 0 else math.exp(-3.0 * mc)
    return q1 - 1.5 * factor * iqr
