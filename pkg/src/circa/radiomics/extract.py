"""Per-case feature extraction over the three lung segments."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..segmentation.roi import RoiImage
from .catalog import FEATURES_PER_SEGMENT, SEGMENTS, TOTAL_FEATURES
from .discretize import discretize
from .firstorder import first_order_features
from .texture import glcm_features, glrlm_features, glszm_features, ngtdm_features

DEFAULT_BIN_WIDTH = 0.05
AUGMENTATION_BIN_WIDTH = 0.01


@dataclass
class FeatureVector:
    """261 values in catalog order plus the discretization used."""

    values: np.ndarray
    bin_width: float
    empty_segments: tuple = field(default_factory=tuple)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (TOTAL_FEATURES,):
            raise ValueError(f"feature vector must have {TOTAL_FEATURES} values")
        if not np.isfinite(self.values).all():
            raise ValueError("feature vector contains non-finite values")


def segment_features(pixels: np.ndarray, seg_mask: np.ndarray,
                     bin_width: float) -> np.ndarray:
    """87 features for one segment: first-order then the texture families."""
    values = pixels[seg_mask]
    levels = np.zeros(pixels.shape, dtype=np.int32)
    levels[seg_mask] = discretize(values, bin_width)
    return np.concatenate([
        first_order_features(values, bin_width),
        glcm_features(levels, seg_mask),
        glrlm_features(levels, seg_mask),
        glszm_features(levels, seg_mask),
        ngtdm_features(levels, seg_mask),
    ])


def extract_case_features(roi: RoiImage, trisection, bin_width: float = DEFAULT_BIN_WIDTH) -> FeatureVector:
    """Concatenate UL, ML, LL segment features into the 261-vector.

    Segments with no lung pixels contribute an all-zero block and are
    flagged rather than raising, since severe pathology can blank a band.
    """
    blocks = []
    empty = []
    for seg_name, seg_mask in zip(SEGMENTS, trisection):
        if not seg_mask.any():
            blocks.append(np.zeros(FEATURES_PER_SEGMENT))
            empty.append(seg_name)
            continue
        blocks.append(segment_features(roi.raw, seg_mask, bin_width))
    return FeatureVector(values=np.concatenate(blocks), bin_width=bin_width,
                         empty_segments=tuple(empty))
