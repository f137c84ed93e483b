"""Lung mask post-processing, quality gating, and ROI construction."""

from .hull import convex_hull_mask
from .postprocess import (
    connected_components,
    disc_element,
    keep_largest_components,
    postprocess_mask,
)
from .quality import (
    MIN_LUNG_DIMENSION,
    MaskMetrics,
    QualityScore,
    mask_bbox,
    mask_metrics,
    medcouple,
    quality_score,
    skewed_outlier_threshold,
    too_small_check,
)
from .roi import (
    DEFAULT_MIN_GAP,
    ROI_SIZE,
    RoiImage,
    build_roi,
    compute_train_stats,
    load_train_stats,
    lung_trisection,
    reposition_lungs,
    save_train_stats,
)

__all__ = [
    "convex_hull_mask", "connected_components", "disc_element",
    "keep_largest_components", "postprocess_mask", "MIN_LUNG_DIMENSION",
    "MaskMetrics", "QualityScore", "mask_bbox", "mask_metrics", "medcouple",
    "quality_score", "skewed_outlier_threshold", "too_small_check",
    "DEFAULT_MIN_GAP", "ROI_SIZE", "RoiImage", "build_roi",
    "compute_train_stats", "load_train_stats", "lung_trisection",
    "reposition_lungs", "save_train_stats",
]
