"""Probability-map post-processing into lung masks."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from ..errors import NoLungFound
from ..imaging.raster import validate_raster
from .hull import convex_hull_mask

_STRUCT8 = np.ones((3, 3), dtype=bool)


def disc_element(radius: int = 2) -> np.ndarray:
    """Disc structuring element; radius 2 gives the 5x5 disc."""
    ax = np.arange(-radius, radius + 1)
    return (ax[:, None] ** 2 + ax[None, :] ** 2) <= radius ** 2


def connected_components(mask: np.ndarray):
    """8-connected labeling; returns (labels, sizes ordered by label)."""
    labels, n = ndimage.label(mask, structure=_STRUCT8)
    sizes = np.bincount(labels.ravel())[1:] if n else np.array([], dtype=np.int64)
    return labels, sizes


def keep_largest_components(mask: np.ndarray, keep: int = 2) -> np.ndarray:
    labels, sizes = connected_components(mask)
    if sizes.size == 0:
        return np.zeros_like(mask, dtype=bool)
    order = np.argsort(-sizes, kind="stable")[:keep]
    out = np.zeros_like(mask, dtype=bool)
    for idx in order:
        out |= labels == idx + 1
    return out


def postprocess_mask(prob_map: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Binarize, keep the two largest regions, open/close, convexify.

    Steps: foreground = prob >= threshold; 8-connected labeling; keep the two
    largest components (one if only one exists); per kept component,
    morphological opening then closing with a 5x5 disc, then replacement by
    the convex hull of its remaining pixel centers. If the two hulls meet,
    they collapse to the hull of their union, so the output always has at
    most two components and every component is convex. Raises NoLungFound
    when binarization (or the morphology) leaves no foreground.
    """
    prob_map = validate_raster(prob_map)
    binary = prob_map >= threshold
    if not binary.any():
        raise NoLungFound("no foreground above threshold")
    labels, sizes = connected_components(binary)
    order = np.argsort(-sizes, kind="stable")[:2]
    disc = disc_element(2)
    hulls = []
    for idx in order:
        comp = labels == idx + 1
        comp = ndimage.binary_closing(ndimage.binary_opening(comp, disc), disc)
        if comp.any():
            hulls.append(convex_hull_mask(comp))
    if not hulls:
        raise NoLungFound("morphology removed all foreground")
    out = hulls[0]
    for h in hulls[1:]:
        out = out | h
    if len(hulls) > 1:
        _, merged_sizes = connected_components(out)
        if merged_sizes.size < len(hulls):
            out = convex_hull_mask(out)
    return out
