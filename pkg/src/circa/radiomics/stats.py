"""Feature ranking (Kruskal-Wallis + eta squared), selection, and scaling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .. import artifacts
from ..errors import DegenerateGroups


@dataclass(frozen=True)
class KruskalResult:
    h: float
    p_value: float
    eta_squared: float


@dataclass(frozen=True)
class FeatureStat:
    index: int
    name: str
    h: float
    p_value: float
    eta_squared: float


@dataclass
class SelectionReport:
    stats: list
    selected: list

    def to_dict(self) -> dict:
        return {
            "stats": [vars(s) for s in self.stats],
            "selected": list(self.selected),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SelectionReport":
        return cls(stats=[FeatureStat(**s) for s in doc["stats"]],
                   selected=list(doc["selected"]))


def _average_ranks(pooled: np.ndarray) -> np.ndarray:
    order = np.argsort(pooled, kind="stable")
    ranks = np.empty(pooled.size, dtype=np.float64)
    sorted_vals = pooled[order]
    i = 0
    while i < pooled.size:
        j = i
        while j + 1 < pooled.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def kruskal_wallis(groups) -> KruskalResult:
    """Tie-corrected H, its chi-square p-value, and eta squared.

    eta_squared = (H - k + 1) / (n - k), clamped at zero. All-identical
    pooled values define H = 0.
    """
    groups = [np.asarray(g, dtype=np.float64).ravel() for g in groups]
    groups = [g for g in groups if g.size]
    k = len(groups)
    if k < 2:
        raise DegenerateGroups("need at least two non-empty groups")
    sizes = np.array([g.size for g in groups])
    n = int(sizes.sum())
    if n <= k:
        raise DegenerateGroups("need more observations than groups")

    pooled = np.concatenate(groups)
    ranks = _average_ranks(pooled)
    h = 0.0
    offset = 0
    for g in groups:
        rank_sum = ranks[offset:offset + g.size].sum()
        h += rank_sum ** 2 / g.size
        offset += g.size
    h = 12.0 / (n * (n + 1)) * h - 3.0 * (n + 1)

    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_sum = float((tie_counts ** 3 - tie_counts).sum())
    denom = 1.0 - tie_sum / (n ** 3 - n)
    h = h / denom if denom > 0 else 0.0

    p_value = float(chi2.sf(h, k - 1))
    eta_squared = max((h - k + 1) / (n - k), 0.0)
    return KruskalResult(h=float(h), p_value=p_value, eta_squared=float(eta_squared))


def rank_features(matrix: np.ndarray, labels: np.ndarray, names) -> list:
    """Per-column Kruskal-Wallis over the label groups."""
    matrix = np.asarray(matrix, dtype=np.float64)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    stats = []
    for idx in range(matrix.shape[1]):
        groups = [matrix[labels == c, idx] for c in classes]
        res = kruskal_wallis(groups)
        stats.append(FeatureStat(index=idx, name=str(names[idx]), h=res.h,
                                 p_value=res.p_value, eta_squared=res.eta_squared))
    return stats


def select_features(stats, min_eta: float = 0.01, cap: int = 200) -> list:
    """Indices with eta_squared >= min_eta, largest first, truncated at cap.

    Equal effect sizes break ties by catalog index, so the selection is a
    deterministic function of the report.
    """
    eligible = [s for s in stats if s.eta_squared >= min_eta]
    eligible.sort(key=lambda s: (-s.eta_squared, s.index))
    return [s.index for s in eligible[:cap]]


def build_selection_report(matrix, labels, names, min_eta: float = 0.01,
                           cap: int = 200) -> SelectionReport:
    stats = rank_features(matrix, labels, names)
    return SelectionReport(stats=stats, selected=select_features(stats, min_eta, cap))


@dataclass
class FeatureScaler:
    """Column z-scoring parameters; zero-variance columns are dropped."""

    mean: np.ndarray
    std: np.ndarray
    retained: np.ndarray  # indices into the input vector

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            return (x[self.retained] - self.mean) / self.std
        return (x[:, self.retained] - self.mean) / self.std

    @property
    def output_dim(self) -> int:
        return int(self.retained.size)


def fit_scaler(matrix: np.ndarray) -> FeatureScaler:
    """Column means/population stds; flags zero-variance columns for removal."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.size == 0:
        raise ValueError("cannot fit a scaler on an empty matrix")
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)
    retained = np.flatnonzero(std > 0.0)
    return FeatureScaler(mean=mean[retained], std=std[retained], retained=retained)


def apply_scaler(x: np.ndarray, scaler: FeatureScaler) -> np.ndarray:
    return scaler.transform(x)


def save_scaler(path, scaler: FeatureScaler, meta: dict | None = None) -> str:
    return artifacts.save_artifact(path, "feature_scaler", meta or {}, {
        "mean": scaler.mean, "std": scaler.std,
        "retained": scaler.retained.astype(np.int64),
    })


def load_scaler(path) -> FeatureScaler:
    art = artifacts.load_artifact(path, expect_kind="feature_scaler")
    return FeatureScaler(
        mean=art.tensors["mean"].astype(np.float64),
        std=art.tensors["std"].astype(np.float64),
        retained=art.tensors["retained"].astype(np.intp),
    )
