"""Fixed-bin-width gray-level discretization."""

from __future__ import annotations

import numpy as np


def discretize(values: np.ndarray, bin_width: float) -> np.ndarray:
    """Map intensities to 1-based gray levels with a fixed bin width.

    level(v) = floor((v - min) / bin_width) + 1; the last bin is closed, so
    the number of levels is floor((max - min) / bin_width) + 1 and a
    constant input collapses to a single level.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return np.zeros(0, dtype=np.int32)
    lo = values.min()
    return (np.floor((values - lo) / bin_width) + 1).astype(np.int32)


def level_count(values: np.ndarray, bin_width: float) -> int:
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return 0
    return int(np.floor((values.max() - values.min()) / bin_width)) + 1
