"""Pure-numpy texture-matrix kernels (fallback for the compiled twin).

All kernels take a 2-D int32 level image (values 1..n_levels inside the
segment; anything outside the mask is ignored) and a boolean segment mask.
Count outputs are exact integers; ngtdm sums follow a fixed neighbor
iteration order so both backends produce bit-identical floats.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

EIGHT_NEIGHBORS = ((-1, -1), (-1, 0), (-1, 1), (0, -1),
                   (0, 1), (1, -1), (1, 0), (1, 1))

_STRUCT8 = np.ones((3, 3), dtype=bool)


def glcm_counts(levels: np.ndarray, mask: np.ndarray,
                offsets: tuple, n_levels: int) -> np.ndarray:
    """Symmetric co-occurrence counts, one matrix per offset.

    Returns int64 array (n_offsets, n_levels, n_levels); each in-mask pixel
    pair (p, p+offset) contributes to both (a, b) and (b, a).
    """
    h, w = levels.shape
    out = np.zeros((len(offsets), n_levels, n_levels), dtype=np.int64)
    for k, (dr, dc) in enumerate(offsets):
        r0s, r0e = max(0, -dr), min(h, h - dr)
        c0s, c0e = max(0, -dc), min(w, w - dc)
        if r0s >= r0e or c0s >= c0e:
            continue
        a_mask = mask[r0s:r0e, c0s:c0e]
        b_mask = mask[r0s + dr:r0e + dr, c0s + dc:c0e + dc]
        valid = a_mask & b_mask
        a = levels[r0s:r0e, c0s:c0e][valid] - 1
        b = levels[r0s + dr:r0e + dr, c0s + dc:c0e + dc][valid] - 1
        np.add.at(out[k], (a, b), 1)
        np.add.at(out[k], (b, a), 1)
    return out


def glrlm_counts(levels: np.ndarray, mask: np.ndarray,
                 direction: tuple, n_levels: int, max_run: int) -> np.ndarray:
    """Run-length counts along one direction; int64 (n_levels, max_run)."""
    out = np.zeros((n_levels, max_run), dtype=np.int64)
    sentinel = np.where(mask, levels, 0).astype(np.int64)
    for line in _lines(sentinel, direction):
        if line.size == 0:
            continue
        _rle_accumulate(line, out)
    return out


def _lines(arr: np.ndarray, direction: tuple):
    dr, dc = direction
    h, w = arr.shape
    if (dr, dc) == (0, 1):
        for r in range(h):
            yield arr[r]
    elif (dr, dc) == (1, 0):
        for c in range(w):
            yield arr[:, c]
    elif (dr, dc) == (1, 1):
        for off in range(-(h - 1), w):
            yield np.diagonal(arr, offset=off)
    elif (dr, dc) == (1, -1):
        flipped = arr[:, ::-1]
        for off in range(-(h - 1), w):
            yield np.diagonal(flipped, offset=off)
    else:
        raise ValueError(f"unsupported run direction {direction}")


def _rle_accumulate(line: np.ndarray, out: np.ndarray) -> None:
    line = np.ascontiguousarray(line)
    if line.size == 1:
        if line[0] > 0:
            out[line[0] - 1, 0] += 1
        return
    breaks = np.flatnonzero(line[1:] != line[:-1])
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks, [line.size - 1]))
    vals = line[starts]
    lens = ends - starts + 1
    sel = vals > 0
    np.add.at(out, (vals[sel] - 1, lens[sel] - 1), 1)


def glszm_counts(levels: np.ndarray, mask: np.ndarray, n_levels: int) -> np.ndarray:
    """Zone counts: int64 rows (level, zone_size, count) sorted ascending.

    A zone is an 8-connected component of equal gray level inside the mask.
    """
    rows = []
    present = np.unique(levels[mask]) if mask.any() else []
    for lv in present:
        blob = (levels == lv) & mask
        labeled, n = ndimage.label(blob, structure=_STRUCT8)
        if n == 0:
            continue
        sizes = np.bincount(labeled.ravel())[1:]
        for size, count in zip(*np.unique(sizes, return_counts=True)):
            rows.append((int(lv), int(size), int(count)))
    rows.sort()
    return np.array(rows, dtype=np.int64).reshape(-1, 3)


def ngtdm_sums(levels: np.ndarray, mask: np.ndarray, n_levels: int):
    """Neighborhood gray-tone difference accumulators.

    For each in-mask pixel with at least one in-mask 8-neighbor, A is the
    mean neighbor level; returns (n_i int64, s_i float64) indexed by
    level-1 with n_i the pixel count and s_i the summed |level - A|.
    """
    h, w = levels.shape
    nbr_sum = np.zeros((h, w), dtype=np.float64)
    nbr_cnt = np.zeros((h, w), dtype=np.float64)
    lv = np.where(mask, levels, 0).astype(np.float64)
    inm = mask.astype(np.float64)
    for dr, dc in EIGHT_NEIGHBORS:
        r0s, r0e = max(0, -dr), min(h, h - dr)
        c0s, c0e = max(0, -dc), min(w, w - dc)
        if r0s >= r0e or c0s >= c0e:
            continue
        nbr_sum[r0s:r0e, c0s:c0e] += lv[r0s + dr:r0e + dr, c0s + dc:c0e + dc]
        nbr_cnt[r0s:r0e, c0s:c0e] += inm[r0s + dr:r0e + dr, c0s + dc:c0e + dc]
    valid = mask & (nbr_cnt > 0)
    n_i = np.zeros(n_levels, dtype=np.int64)
    s_i = np.zeros(n_levels, dtype=np.float64)
    if not valid.any():
        return n_i, s_i
    idx = levels[valid] - 1
    mean_nbr = nbr_sum[valid] / nbr_cnt[valid]
    diffs = np.abs(levels[valid].astype(np.float64) - mean_nbr)
    np.add.at(n_i, idx, 1)
    np.add.at(s_i, idx, diffs)
    return n_i, s_i
