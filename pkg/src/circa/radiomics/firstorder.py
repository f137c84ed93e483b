"""First-order intensity features on a segment's pixel values."""

from __future__ import annotations

import numpy as np

from ..errors import EmptySegment
from .discretize import discretize

FIRST_ORDER_NAMES = (
    "energy",
    "total_energy",
    "entropy",
    "minimum",
    "percentile_10",
    "percentile_90",
    "maximum",
    "mean",
    "median",
    "interquartile_range",
    "range",
    "mean_absolute_deviation",
    "robust_mean_absolute_deviation",
    "root_mean_squared",
    "standard_deviation",
    "skewness",
    "kurtosis",
    "variance",
    "uniformity",
)


def first_order_features(values: np.ndarray, bin_width: float,
                         pixel_area: float = 1.0) -> np.ndarray:
    """The 19 first-order features in FIRST_ORDER_NAMES order.

    Conventions: population variance; entropy in bits on the discretized
    histogram with 0*log0 = 0; excess kurtosis; skewness and kurtosis of a
    constant segment are 0.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise EmptySegment("first-order features need at least one pixel")

    n = values.size
    mean = values.mean()
    centered = values - mean
    m2 = np.mean(centered ** 2)
    m3 = np.mean(centered ** 3)
    m4 = np.mean(centered ** 4)
    std = np.sqrt(m2)

    levels = discretize(values, bin_width)
    counts = np.bincount(levels)[1:]
    probs = counts[counts > 0] / n
    entropy = float(-(probs * np.log2(probs)).sum())
    uniformity = float((probs ** 2).sum())

    p10, p25, p50, p75, p90 = np.percentile(values, [10, 25, 50, 75, 90])
    robust = values[(values >= p10) & (values <= p90)]
    rmad = float(np.abs(robust - robust.mean()).mean()) if robust.size else 0.0

    energy = float((values ** 2).sum())
    skewness = float(m3 / std ** 3) if m2 > 0 else 0.0
    kurtosis = float(m4 / m2 ** 2 - 3.0) if m2 > 0 else 0.0

    return np.array([
        energy,
        pixel_area * energy,
        entropy,
        float(values.min()),
        float(p10),
        float(p90),
        float(values.max()),
        float(mean),
        float(p50),
        float(p75 - p25),
        float(values.max() - values.min()),
        float(np.abs(centered).mean()),
        rmad,
        float(np.sqrt((values ** 2).mean())),
        float(std),
        skewness,
        kurtosis,
        float(m2),
        uniformity,
    ])
