"""Intensity standardization, contrast enhancement, and resizing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import validate_raster

DEFAULT_LOW_QUANTILE = 0.0025
DEFAULT_HIGH_QUANTILE = 0.9975


def nearest_rank_quantile(values: np.ndarray, q: float) -> float:
    """Nearest-rank quantile: smallest value whose cumulative count >= q*n."""
    s = np.sort(np.asarray(values, dtype=np.float64), axis=None)
    n = s.size
    if n == 0:
        raise ValueError("empty value set")
    rank = int(np.ceil(q * n))
    rank = min(max(rank, 1), n)
    return float(s[rank - 1])


def standardize_intensity(img: np.ndarray,
                          low_q: float = DEFAULT_LOW_QUANTILE,
                          high_q: float = DEFAULT_HIGH_QUANTILE) -> np.ndarray:
    """Clip intensity outliers at the given quantiles and rescale to [0,1].

    A zero clipped range (constant image) maps to all zeros instead of
    raising; a downstream gate rejects such images.
    """
    img = validate_raster(img)
    if not (0.0 <= low_q < high_q <= 1.0):
        raise ValueError("quantiles must satisfy 0 <= low < high <= 1")
    lo = nearest_rank_quantile(img, low_q)
    hi = nearest_rank_quantile(img, high_q)
    if hi <= lo:
        return np.zeros_like(img)
    out = (np.clip(img, lo, hi) - lo) / (hi - lo)
    return np.clip(out, 0.0, 1.0)


def rescale_within_mask(img: np.ndarray, mask: np.ndarray,
                        low_q: float, high_q: float) -> np.ndarray:
    """Standardize only the masked pixels in place of the raster; rest -> 0."""
    img = validate_raster(img)
    vals = img[mask]
    out = np.zeros_like(img)
    if vals.size == 0:
        return out
    lo = nearest_rank_quantile(vals, low_q)
    hi = nearest_rank_quantile(vals, high_q)
    if hi <= lo:
        return out
    out[mask] = np.clip((np.clip(vals, lo, hi) - lo) / (hi - lo), 0.0, 1.0)
    return out


def enhance_contrast(img: np.ndarray, tiles: tuple[int, int] = (8, 8),
                     clip_limit: float | None = 2.0, nbins: int = 256) -> np.ndarray:
    """Contrast-limited adaptive histogram equalization.

    Per tile, the histogram over `nbins` uniform bins on [0,1] is clipped at
    clip_limit * npix / nbins (excess redistributed uniformly) and the value
    is remapped through (cdf - cdf_first) / (1 - cdf_first), where cdf_first
    is the cdf at the first bin occupied by raw counts. Tiles with zero
    intensity range pass their pixels through unchanged, so constant images
    are fixed points. Tile mappings are blended bilinearly between tile
    centers, with edge clamping.
    """
    img = validate_raster(img)
    h, w = img.shape
    ty, tx = max(1, min(tiles[0], h)), max(1, min(tiles[1], w))
    edges_r = np.array([(h * i) // ty for i in range(ty + 1)])
    edges_c = np.array([(w * j) // tx for j in range(tx + 1)])
    bins = np.minimum((img * nbins).astype(np.int64), nbins - 1)

    mapping = np.zeros((ty, tx, nbins))
    degenerate = np.zeros((ty, tx), dtype=bool)
    for i in range(ty):
        for j in range(tx):
            tile = img[edges_r[i]:edges_r[i + 1], edges_c[j]:edges_c[j + 1]]
            if tile.size == 0 or tile.max() == tile.min():
                degenerate[i, j] = True
                continue
            tile_bins = bins[edges_r[i]:edges_r[i + 1], edges_c[j]:edges_c[j + 1]]
            hist = np.bincount(tile_bins.ravel(), minlength=nbins).astype(np.float64)
            first_occupied = int(np.argmax(hist > 0))
            if clip_limit is not None and clip_limit > 0:
                limit = max(clip_limit * tile.size / nbins, 1.0)
                excess = np.clip(hist - limit, 0.0, None).sum()
                hist = np.minimum(hist, limit) + excess / nbins
            cdf = np.cumsum(hist)
            cdf /= cdf[-1]
            cdf0 = cdf[first_occupied]
            if cdf0 >= 1.0:
                degenerate[i, j] = True
                continue
            mapping[i, j] = np.clip((cdf - cdf0) / (1.0 - cdf0), 0.0, 1.0)

    if degenerate.all():
        return img.copy()

    centers_r = (edges_r[:-1] + edges_r[1:] - 1) / 2.0
    centers_c = (edges_c[:-1] + edges_c[1:] - 1) / 2.0
    i0, i1, wr = _axis_blend(np.arange(h, dtype=np.float64), centers_r)
    j0, j1, wc = _axis_blend(np.arange(w, dtype=np.float64), centers_c)

    out = np.zeros_like(img)
    for ia, wa in ((i0, 1.0 - wr), (i1, wr)):
        for ja, wb in ((j0, 1.0 - wc), (j1, wc)):
            val = mapping[ia[:, None], ja[None, :], bins]
            deg = degenerate[ia[:, None], ja[None, :]]
            val = np.where(deg, img, val)
            out += wa[:, None] * wb[None, :] * val
    return np.clip(out, 0.0, 1.0)


def _axis_blend(coords: np.ndarray, centers: np.ndarray):
    """Neighboring tile indices and blend weight along one axis."""
    idx = np.searchsorted(centers, coords, side="right")
    i1 = np.clip(idx, 0, len(centers) - 1)
    i0 = np.clip(idx - 1, 0, len(centers) - 1)
    c0, c1 = centers[i0], centers[i1]
    denom = np.where(c1 > c0, c1 - c0, 1.0)
    w1 = np.clip((coords - c0) / denom, 0.0, 1.0)
    return i0, i1, w1


@dataclass(frozen=True)
class Resized:
    """Resize output plus the zero padding applied in fit_pad mode."""

    pixels: np.ndarray
    pad_top: int = 0
    pad_bottom: int = 0
    pad_left: int = 0
    pad_right: int = 0


def bilinear_resample(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resampling with half-pixel centers and edge clamping."""
    h, w = img.shape
    if (out_h, out_w) == (h, w):
        return img.copy()
    r = np.clip((np.arange(out_h) + 0.5) * (h / out_h) - 0.5, 0, h - 1)
    c = np.clip((np.arange(out_w) + 0.5) * (w / out_w) - 0.5, 0, w - 1)
    r0 = np.floor(r).astype(np.intp)
    c0 = np.floor(c).astype(np.intp)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    fr = (r - r0)[:, None]
    fc = (c - c0)[None, :]
    top = img[np.ix_(r0, c0)] * (1 - fc) + img[np.ix_(r0, c1)] * fc
    bot = img[np.ix_(r1, c0)] * (1 - fc) + img[np.ix_(r1, c1)] * fc
    return top * (1 - fr) + bot * fr


def resize(img: np.ndarray, target_w: int, target_h: int,
           mode: str = "exact") -> Resized:
    """Resize a raster.

    exact: bilinear to (target_h, target_w), aspect ratio ignored.
    fit_pad: scale so the binding side hits the target, then pad
    symmetrically with zeros (odd remainders go to bottom/right).
    """
    img = validate_raster(img)
    if target_w < 1 or target_h < 1:
        raise ValueError("target dimensions must be >= 1")
    if mode == "exact":
        return Resized(pixels=np.clip(bilinear_resample(img, target_h, target_w), 0.0, 1.0))
    if mode != "fit_pad":
        raise ValueError(f"unknown resize mode {mode!r}")

    h, w = img.shape
    if target_w / w <= target_h / h:
        new_w = target_w
        new_h = max(1, round(h * target_w / w))
    else:
        new_h = target_h
        new_w = max(1, round(w * target_h / h))
    content = np.clip(bilinear_resample(img, new_h, new_w), 0.0, 1.0)
    pad_top = (target_h - new_h) // 2
    pad_bottom = target_h - new_h - pad_top
    pad_left = (target_w - new_w) // 2
    pad_right = target_w - new_w - pad_left
    canvas = np.zeros((target_h, target_w))
    canvas[pad_top:pad_top + new_h, pad_left:pad_left + new_w] = content
    return Resized(canvas, pad_top, pad_bottom, pad_left, pad_right)
