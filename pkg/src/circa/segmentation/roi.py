"""ROI construction (the classifier input) and lung trisection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import artifacts
from ..errors import EmptyMask
from ..imaging.ops import rescale_within_mask, resize
from ..imaging.raster import validate_mask, validate_raster
from .postprocess import connected_components
from .quality import mask_bbox

ROI_SIZE = 512
ROI_LOW_QUANTILE = 0.0005
ROI_HIGH_QUANTILE = 0.9995
DEFAULT_MIN_GAP = 8
STD_FLOOR = 1e-6


@dataclass
class RoiImage:
    """512x512 lung region: classifier input plus its [0,1] source raster.

    `pixels` has per-pixel train statistics applied when provided; `raw` is
    the masked, repositioned, cropped, resize-padded raster in [0,1] used by
    the radiomics branch. Background raw pixels are exactly 0.
    """

    pixels: np.ndarray
    raw: np.ndarray
    mask: np.ndarray
    norm_applied: bool = False
    norm_id: str | None = None


def reposition_lungs(img: np.ndarray, mask: np.ndarray, min_gap: int = DEFAULT_MIN_GAP):
    """Translate two lung components to a fixed horizontal gap and crop.

    Single-component masks are cropped to their bounding box unchanged.
    Returns (cropped image, cropped mask).
    """
    labels, sizes = connected_components(mask)
    n_comp = sizes.size
    if n_comp == 0:
        raise EmptyMask("mask has no foreground")
    if n_comp == 1:
        r0, r1, c0, c1 = mask_bbox(mask)
        return img[r0:r1 + 1, c0:c1 + 1].copy(), mask[r0:r1 + 1, c0:c1 + 1].copy()
    if n_comp > 2:
        raise ValueError(f"mask must have 1 or 2 components, found {n_comp}")

    boxes = [mask_bbox(labels == k) for k in (1, 2)]
    left_idx = 0 if boxes[0][2] <= boxes[1][2] else 1
    right_idx = 1 - left_idx
    lb, rb = boxes[left_idx], boxes[right_idx]
    # shift the right component horizontally so the bbox gap equals min_gap
    dx = (lb[3] + 1 + min_gap) - rb[2]

    comps = []
    for idx, box, shift in ((left_idx, lb, 0), (right_idx, rb, dx)):
        comp_mask = labels == idx + 1
        coords = np.argwhere(comp_mask)
        vals = img[comp_mask]
        comps.append((coords[:, 0], coords[:, 1] + shift, vals))

    all_r = np.concatenate([c[0] for c in comps])
    all_c = np.concatenate([c[1] for c in comps])
    r_min, c_min = all_r.min(), all_c.min()
    out_h = all_r.max() - r_min + 1
    out_w = all_c.max() - c_min + 1
    out_img = np.zeros((out_h, out_w))
    out_mask = np.zeros((out_h, out_w), dtype=bool)
    for rr, cc, vals in comps:
        out_img[rr - r_min, cc - c_min] = vals
        out_mask[rr - r_min, cc - c_min] = True
    return out_img, out_mask


def _nearest_mask_resize(mask: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w = mask.shape
    rows = np.minimum((np.arange(out_h) + 0.5) * (h / out_h), h - 1).astype(np.intp)
    cols = np.minimum((np.arange(out_w) + 0.5) * (w / out_w), w - 1).astype(np.intp)
    return mask[np.ix_(rows, cols)]


def build_roi(img: np.ndarray, mask: np.ndarray, train_stats=None,
              low_q: float = ROI_LOW_QUANTILE, high_q: float = ROI_HIGH_QUANTILE,
              min_gap: int = DEFAULT_MIN_GAP, out_size: int = ROI_SIZE,
              norm_id: str | None = None) -> RoiImage:
    """Mask, re-standardize, reposition, crop, resize-pad, standardize.

    train_stats, when given, is a (mean, std) pair of out_size x out_size
    arrays applied per pixel with a std floor of 1e-6.
    """
    img = validate_raster(img)
    mask = validate_mask(mask)
    if img.shape != mask.shape:
        raise ValueError("image and mask dimensions differ")
    if not mask.any():
        raise EmptyMask("cannot build ROI from an empty mask")

    masked = rescale_within_mask(img, mask, low_q, high_q)
    cropped, cropped_mask = reposition_lungs(masked, mask, min_gap=min_gap)
    res = resize(cropped, out_size, out_size, mode="fit_pad")
    raw = res.pixels
    content_h = out_size - res.pad_top - res.pad_bottom
    content_w = out_size - res.pad_left - res.pad_right
    roi_mask = np.zeros((out_size, out_size), dtype=bool)
    roi_mask[res.pad_top:res.pad_top + content_h,
             res.pad_left:res.pad_left + content_w] = \
        _nearest_mask_resize(cropped_mask, content_h, content_w)

    if train_stats is not None:
        mean, std = train_stats
        pixels = (raw - mean) / np.maximum(std, STD_FLOOR)
        return RoiImage(pixels=pixels, raw=raw, mask=roi_mask,
                        norm_applied=True, norm_id=norm_id)
    return RoiImage(pixels=raw.copy(), raw=raw, mask=roi_mask)


def lung_trisection(mask: np.ndarray):
    """Split the foreground bbox into UL/ML/LL bands intersected with the mask.

    Heights are floor(H/3), floor(H/3), H - 2*floor(H/3); the remainder rows
    go to the lower band. The three outputs partition the input mask.
    """
    mask = validate_mask(mask)
    bbox = mask_bbox(mask)
    if bbox is None:
        raise EmptyMask("cannot trisect an empty mask")
    r0, r1, _, _ = bbox
    height = r1 - r0 + 1
    h_band = height // 3
    cut1 = r0 + h_band
    cut2 = r0 + 2 * h_band
    upper = np.zeros_like(mask)
    middle = np.zeros_like(mask)
    lower = np.zeros_like(mask)
    upper[r0:cut1] = mask[r0:cut1]
    middle[cut1:cut2] = mask[cut1:cut2]
    lower[cut2:r1 + 1] = mask[cut2:r1 + 1]
    return upper, middle, lower


def compute_train_stats(rasters) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel mean and population std over a training corpus of rasters."""
    stack = np.stack([validate_raster(r) for r in rasters])
    return stack.mean(axis=0), stack.std(axis=0)


def save_train_stats(path, mean: np.ndarray, std: np.ndarray, norm_id: str = "train") -> str:
    blob = np.stack([mean, std]).astype(np.float32)
    return artifacts.save_artifact(path, "train_stats", {"norm_id": norm_id},
                                   {"mean_std": blob})


def load_train_stats(path):
    art = artifacts.load_artifact(path, expect_kind="train_stats")
    blob = art.tensors["mean_std"].astype(np.float64)
    return (blob[0], blob[1]), art.meta.get("norm_id", "train")
