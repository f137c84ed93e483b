"""Out-of-sample 2D embedding via cosine k-NN over the training map."""

from __future__ import annotations

import numpy as np

from ..errors import EmptyTrainSet

DEFAULT_K = 10
_EXACT_TOL = 1e-12
_WEIGHT_EPS = 1e-9


def cosine_distances(query: np.ndarray, train: np.ndarray) -> np.ndarray:
    """1 - cosine similarity; zero-norm vectors sit at distance 1 from
    everything except an exactly matching zero vector (distance 0)."""
    qn = float(np.linalg.norm(query))
    tn = np.linalg.norm(train, axis=1)
    out = np.ones(train.shape[0])
    if qn < _EXACT_TOL:
        out[tn < _EXACT_TOL] = 0.0
        return out
    valid = tn >= _EXACT_TOL
    sims = (train[valid] @ query) / (tn[valid] * qn)
    out[valid] = 1.0 - np.clip(sims, -1.0, 1.0)
    return out


def knn_embed(vec: np.ndarray, train_features: np.ndarray,
              train_coords: np.ndarray, k: int = DEFAULT_K) -> np.ndarray:
    """Inverse-distance-weighted mean of the k nearest training coordinates.

    An exact feature match (cosine distance ~ 0) returns that training
    point's coordinates directly.
    """
    train_features = np.asarray(train_features, dtype=np.float64)
    train_coords = np.asarray(train_coords, dtype=np.float64)
    if train_features.size == 0:
        raise EmptyTrainSet("embedding requires a non-empty training set")
    if k < 1:
        raise ValueError("k must be >= 1")
    vec = np.asarray(vec, dtype=np.float64).ravel()
    dists = cosine_distances(vec, train_features)
    nearest = int(np.argmin(dists))
    if dists[nearest] <= _EXACT_TOL:
        return train_coords[nearest].copy()
    idx = np.argsort(dists, kind="stable")[:min(k, dists.size)]
    weights = 1.0 / (dists[idx] + _WEIGHT_EPS)
    return (train_coords[idx] * weights[:, None]).sum(axis=0) / weights.sum()
