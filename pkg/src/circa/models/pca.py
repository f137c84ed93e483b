"""Principal component analysis with a retained-variance cutoff."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import artifacts
from ..errors import DegenerateMatrix


@dataclass
class PcaModel:
    mean: np.ndarray
    components: np.ndarray          # (k, d), orthonormal rows
    explained_variance: np.ndarray  # (k,), non-increasing
    explained_variance_ratio: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


def pca_fit(matrix: np.ndarray, var_fraction: float = 0.90) -> PcaModel:
    """Retain the smallest axis count whose cumulative variance ratio
    reaches var_fraction. Component signs are fixed so the largest-magnitude
    loading is positive, keeping fits reproducible."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] < 2:
        raise ValueError("need a 2-D matrix with at least two rows")
    if not (0.0 < var_fraction <= 1.0):
        raise ValueError("var_fraction must be in (0, 1]")
    mean = matrix.mean(axis=0)
    centered = matrix - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    variances = s ** 2 / (matrix.shape[0] - 1)
    total = variances.sum()
    if total <= 0.0:
        raise DegenerateMatrix("matrix has rank zero")
    ratios = variances / total
    cumulative = np.cumsum(ratios)
    k = int(np.searchsorted(cumulative, var_fraction - 1e-12) + 1)
    k = min(k, len(variances))
    components = vt[:k]
    for i in range(k):
        j = int(np.argmax(np.abs(components[i])))
        if components[i, j] < 0:
            components[i] = -components[i]
    return PcaModel(mean=mean, components=components,
                    explained_variance=variances[:k],
                    explained_variance_ratio=ratios[:k])


def pca_transform(model: PcaModel, x: np.ndarray) -> np.ndarray:
    """Project centered vectors onto the retained axes."""
    x = np.asarray(x, dtype=np.float64)
    return (x - model.mean) @ model.components.T


def save_pca(path, model: PcaModel, meta: dict | None = None) -> str:
    doc = dict(meta or {})
    doc["n_components"] = model.n_components
    return artifacts.save_artifact(path, "pca", doc, {
        "mean": model.mean,
        "components": model.components,
        "explained_variance": model.explained_variance,
        "explained_variance_ratio": model.explained_variance_ratio,
    })


def load_pca(path) -> PcaModel:
    art = artifacts.load_artifact(path, expect_kind="pca")
    return PcaModel(
        mean=art.tensors["mean"].astype(np.float64),
        components=art.tensors["components"].astype(np.float64),
        explained_variance=art.tensors["explained_variance"].astype(np.float64),
        explained_variance_ratio=art.tensors["explained_variance_ratio"].astype(np.float64),
    )
