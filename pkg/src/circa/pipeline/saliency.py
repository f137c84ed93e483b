"""Occlusion saliency: probability drop when patches are zeroed."""

from __future__ import annotations

import numpy as np

from ..models.backends import run_inference


def occlusion_saliency(image: np.ndarray, classifier, patch: int, stride: int,
                       target_class: int) -> np.ndarray:
    """Raw drop map: cell (i, j) holds baseline minus the target-class
    probability with the patch at (i*stride, j*stride) zeroed.

    One cell per patch position; positions start at 0 and step by stride
    while the patch fits. Use normalize_heatmap for display scaling.
    """
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape
    patch = min(patch, h, w)
    baseline = float(run_inference(classifier, image)[target_class])
    rows = list(range(0, h - patch + 1, stride))
    cols = list(range(0, w - patch + 1, stride))
    heat = np.zeros((len(rows), len(cols)))
    for i, r in enumerate(rows):
        for j, c in enumerate(cols):
            occluded = image.copy()
            occluded[r:r + patch, c:c + patch] = 0.0
            prob = float(run_inference(classifier, occluded)[target_class])
            heat[i, j] = baseline - prob
    return heat


def normalize_heatmap(heat: np.ndarray) -> np.ndarray:
    """Min-max scale to [0,1] for display; a flat map renders as zeros."""
    lo = float(heat.min())
    hi = float(heat.max())
    if hi <= lo:
        return np.zeros_like(heat)
    return (heat - lo) / (hi - lo)
