"""Texture features over co-occurrence, run-length, zone, and tone matrices.

Matrix accumulation lives in circa._kernels (compiled when available);
this module turns the raw counts into the named feature values.
"""

from __future__ import annotations

import numpy as np

from .. import _kernels
from ..errors import EmptySegment

DEFAULT_GLCM_OFFSETS = ((0, 1), (1, 0), (1, 1), (1, -1))
DEFAULT_RUN_DIRECTIONS = ((0, 1), (1, 0), (1, 1), (1, -1))

GLCM_NAMES = (
    "autocorrelation", "joint_average", "cluster_prominence", "cluster_shade",
    "cluster_tendency", "contrast", "correlation", "difference_average",
    "difference_entropy", "difference_variance", "joint_energy",
    "joint_entropy", "imc1", "imc2", "idm", "idmn", "id_", "idn",
    "inverse_variance", "maximum_probability", "sum_average", "sum_entropy",
    "sum_of_squares", "mcc",
)

GLRLM_NAMES = (
    "short_run_emphasis", "long_run_emphasis", "gray_level_nonuniformity",
    "gray_level_nonuniformity_normalized", "run_length_nonuniformity",
    "run_length_nonuniformity_normalized", "run_percentage",
    "gray_level_variance", "run_variance", "run_entropy",
    "low_gray_level_run_emphasis", "high_gray_level_run_emphasis",
    "short_run_low_gray_level_emphasis", "short_run_high_gray_level_emphasis",
    "long_run_low_gray_level_emphasis", "long_run_high_gray_level_emphasis",
)

GLSZM_NAMES = (
    "small_area_emphasis", "large_area_emphasis", "gray_level_nonuniformity",
    "gray_level_nonuniformity_normalized", "size_zone_nonuniformity",
    "size_zone_nonuniformity_normalized", "zone_percentage",
    "gray_level_variance", "zone_variance", "zone_entropy",
    "low_gray_level_zone_emphasis", "high_gray_level_zone_emphasis",
    "small_area_low_gray_level_emphasis", "small_area_high_gray_level_emphasis",
    "large_area_low_gray_level_emphasis", "large_area_high_gray_level_emphasis",
)

NGTDM_NAMES = (
    "coarseness", "contrast", "busyness", "complexity", "strength",
    "tone_mean", "tone_variance", "tone_entropy", "mean_difference",
    "weighted_difference", "level_count", "valid_fraction",
)

_COARSENESS_CAP = 1e6


def _entropy_bits(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def glcm_matrix(levels: np.ndarray, mask: np.ndarray,
                offsets=DEFAULT_GLCM_OFFSETS) -> np.ndarray:
    """Normalized symmetric co-occurrence matrix averaged over offsets.

    Offsets that produce no in-segment pair are excluded from the average;
    returns the zero matrix when no offset yields a pair.
    """
    if not mask.any():
        raise EmptySegment("co-occurrence matrix of an empty segment")
    n_levels = int(levels[mask].max())
    counts = _kernels.glcm_counts(levels.astype(np.int32), mask.astype(bool),
                                  tuple(offsets), n_levels)
    mats = []
    for k in range(counts.shape[0]):
        total = counts[k].sum()
        if total > 0:
            mats.append(counts[k] / total)
    if not mats:
        return np.zeros((n_levels, n_levels))
    return np.mean(mats, axis=0)


def glcm_features(levels: np.ndarray, mask: np.ndarray,
                  offsets=DEFAULT_GLCM_OFFSETS) -> np.ndarray:
    """The 24 co-occurrence features in GLCM_NAMES order."""
    p = glcm_matrix(levels, mask, offsets)
    return glcm_features_from_matrix(p)


def glcm_features_from_matrix(p: np.ndarray) -> np.ndarray:
    n = p.shape[0]
    total = p.sum()
    if total <= 0:
        return np.zeros(len(GLCM_NAMES))
    p = p / total
    ii = np.arange(1, n + 1, dtype=np.float64)
    grid_i = ii[:, None]
    grid_j = ii[None, :]

    px = p.sum(axis=1)
    py = p.sum(axis=0)
    mu_x = float((ii * px).sum())
    mu_y = float((ii * py).sum())
    var_x = float(((ii - mu_x) ** 2 * px).sum())
    var_y = float(((ii - mu_y) ** 2 * py).sum())

    # diagonal and anti-diagonal marginals
    k_plus = np.arange(2, 2 * n + 1, dtype=np.float64)
    p_plus = np.array([p[grid_i + grid_j == k].sum() for k in k_plus])
    k_minus = np.arange(0, n, dtype=np.float64)
    p_minus = np.array([p[np.abs(grid_i - grid_j) == k].sum() for k in k_minus])

    autocorrelation = float((grid_i * grid_j * p).sum())
    spread = grid_i + grid_j - mu_x - mu_y
    cluster_prominence = float((spread ** 4 * p).sum())
    cluster_shade = float((spread ** 3 * p).sum())
    cluster_tendency = float((spread ** 2 * p).sum())
    contrast = float(((grid_i - grid_j) ** 2 * p).sum())
    denom = np.sqrt(var_x * var_y)
    correlation = float((autocorrelation - mu_x * mu_y) / denom) if denom > 0 else 1.0

    difference_average = float((k_minus * p_minus).sum())
    difference_entropy = _entropy_bits(p_minus)
    difference_variance = float(((k_minus - difference_average) ** 2 * p_minus).sum())

    joint_energy = float((p ** 2).sum())
    joint_entropy = _entropy_bits(p.ravel())

    hx = _entropy_bits(px)
    hy = _entropy_bits(py)
    outer = px[:, None] * py[None, :]
    nz = (p > 0) & (outer > 0)
    hxy1 = float(-(p[nz] * np.log2(outer[nz])).sum())
    onz = outer > 0
    hxy2 = float(-(outer[onz] * np.log2(outer[onz])).sum())
    imc1 = float((joint_entropy - hxy1) / max(hx, hy)) if max(hx, hy) > 0 else 0.0
    imc2 = float(np.sqrt(max(0.0, 1.0 - np.exp(-2.0 * (hxy2 - joint_entropy)))))

    diff2 = (grid_i - grid_j) ** 2
    absdiff = np.abs(grid_i - grid_j)
    idm = float((p / (1.0 + diff2)).sum())
    idmn = float((p / (1.0 + diff2 / n ** 2)).sum())
    id_ = float((p / (1.0 + absdiff)).sum())
    idn = float((p / (1.0 + absdiff / n)).sum())
    inverse_variance = float((p_minus[1:] / k_minus[1:] ** 2).sum()) if n > 1 else 0.0

    maximum_probability = float(p.max())
    sum_average = float((k_plus * p_plus).sum())
    sum_entropy = _entropy_bits(p_plus)
    sum_of_squares = float(((grid_i - mu_x) ** 2 * p).sum())
    mcc = _mcc(p, px, py)

    return np.array([
        autocorrelation, mu_x, cluster_prominence, cluster_shade,
        cluster_tendency, contrast, correlation, difference_average,
        difference_entropy, difference_variance, joint_energy, joint_entropy,
        imc1, imc2, idm, idmn, id_, idn, inverse_variance,
        maximum_probability, sum_average, sum_entropy, sum_of_squares, mcc,
    ])


def _mcc(p: np.ndarray, px: np.ndarray, py: np.ndarray) -> float:
    """Maximal correlation coefficient: sqrt of the second eigenvalue of Q."""
    present = px > 0
    if present.sum() < 2:
        return 1.0
    sub = p[np.ix_(present, present)]
    spx = px[present]
    spy = py[present]
    q = (sub / spx[:, None]) @ (sub / spy[None, :]).T
    eigs = np.sort(np.real(np.linalg.eigvals(q)))[::-1]
    second = max(float(eigs[1]), 0.0) if eigs.size > 1 else 0.0
    return float(np.sqrt(min(second, 1.0)))


def glrlm_matrix(levels: np.ndarray, mask: np.ndarray,
                 directions=DEFAULT_RUN_DIRECTIONS) -> np.ndarray:
    """Run-length count matrix averaged element-wise over directions."""
    if not mask.any():
        raise EmptySegment("run-length matrix of an empty segment")
    n_levels = int(levels[mask].max())
    max_run = max(levels.shape)
    mats = [
        _kernels.glrlm_counts(levels.astype(np.int32), mask.astype(bool),
                              d, n_levels, max_run)
        for d in directions
    ]
    return np.mean(mats, axis=0)


def glrlm_features(levels: np.ndarray, mask: np.ndarray,
                   directions=DEFAULT_RUN_DIRECTIONS) -> np.ndarray:
    """The 16 run-length features in GLRLM_NAMES order."""
    r = glrlm_matrix(levels, mask, directions)
    return _run_style_features(r, n_pixels=int(mask.sum()))


def glszm_features(levels: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """The 16 size-zone features in GLSZM_NAMES order."""
    if not mask.any():
        raise EmptySegment("size-zone matrix of an empty segment")
    n_levels = int(levels[mask].max())
    rows = _kernels.glszm_counts(levels.astype(np.int32), mask.astype(bool), n_levels)
    if rows.shape[0] == 0:
        return np.zeros(len(GLSZM_NAMES))
    max_size = int(rows[:, 1].max())
    s = np.zeros((n_levels, max_size))
    s[rows[:, 0] - 1, rows[:, 1] - 1] = rows[:, 2]
    return _run_style_features(s, n_pixels=int(mask.sum()))


def _run_style_features(r: np.ndarray, n_pixels: int) -> np.ndarray:
    """Shared GLRLM/GLSZM feature formulas over a (level x length) matrix."""
    total = r.sum()
    if total <= 0:
        return np.zeros(16)
    n_lv, n_ln = r.shape
    iv = np.arange(1, n_lv + 1, dtype=np.float64)[:, None]
    lv = np.arange(1, n_ln + 1, dtype=np.float64)[None, :]
    p = r / total
    by_level = r.sum(axis=1)
    by_length = r.sum(axis=0)

    mu_i = float((p * iv).sum())
    mu_l = float((p * lv).sum())

    return np.array([
        float((r / lv ** 2).sum() / total),
        float((r * lv ** 2).sum() / total),
        float((by_level ** 2).sum() / total),
        float((by_level ** 2).sum() / total ** 2),
        float((by_length ** 2).sum() / total),
        float((by_length ** 2).sum() / total ** 2),
        float(total / n_pixels),
        float((p * (iv - mu_i) ** 2).sum()),
        float((p * (lv - mu_l) ** 2).sum()),
        _entropy_bits(p.ravel()),
        float((r / iv ** 2).sum() / total),
        float((r * iv ** 2).sum() / total),
        float((r / (iv ** 2 * lv ** 2)).sum() / total),
        float((r * iv ** 2 / lv ** 2).sum() / total),
        float((r * lv ** 2 / iv ** 2).sum() / total),
        float((r * iv ** 2 * lv ** 2).sum() / total),
    ])


def ngtdm_features(levels: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """The 12 neighborhood gray-tone features in NGTDM_NAMES order.

    Segments where no pixel has an in-segment neighbor yield all zeros.
    """
    if not mask.any():
        raise EmptySegment("tone matrix of an empty segment")
    n_levels = int(levels[mask].max())
    n_i, s_i = _kernels.ngtdm_sums(levels.astype(np.int32), mask.astype(bool), n_levels)
    n_valid = int(n_i.sum())
    n_pixels = int(mask.sum())
    if n_valid == 0:
        return np.zeros(len(NGTDM_NAMES))

    present = n_i > 0
    p_i = n_i / n_valid
    ii = np.arange(1, n_levels + 1, dtype=np.float64)
    n_gp = int(present.sum())

    pg = p_i[present]
    sg = s_i[present]
    ig = ii[present]

    weighted_difference = float((pg * sg).sum())
    coarseness = _COARSENESS_CAP if weighted_difference == 0 else \
        min(1.0 / weighted_difference, _COARSENESS_CAP)

    if n_gp > 1:
        pij = pg[:, None] * pg[None, :]
        dij2 = (ig[:, None] - ig[None, :]) ** 2
        contrast = float((pij * dij2).sum() / (n_gp * (n_gp - 1))
                         * (sg.sum() / n_valid))
        ipd = np.abs(ig[:, None] * pg[:, None] - ig[None, :] * pg[None, :])
        busy_denom = float(ipd.sum())
        busyness = weighted_difference / busy_denom if busy_denom > 0 else 0.0
        num = np.abs(ig[:, None] - ig[None, :]) * (
            (pg * sg)[:, None] + (pg * sg)[None, :]) / (pg[:, None] + pg[None, :])
        complexity = float(num.sum() / n_valid)
        s_total = float(sg.sum())
        strength = float(((pg[:, None] + pg[None, :]) * dij2).sum() / s_total) \
            if s_total > 0 else 0.0
    else:
        contrast = 0.0
        busyness = 0.0
        complexity = 0.0
        strength = 0.0

    tone_mean = float((pg * ig).sum())
    tone_variance = float((pg * (ig - tone_mean) ** 2).sum())
    tone_entropy = _entropy_bits(pg)
    mean_difference = float(sg.sum() / n_valid)

    return np.array([
        coarseness, contrast, busyness, complexity, strength,
        tone_mean, tone_variance, tone_entropy, mean_difference,
        weighted_difference, float(n_gp), n_valid / n_pixels,
    ])
