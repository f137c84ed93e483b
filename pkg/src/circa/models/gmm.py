"""Per-class 2D Gaussian mixtures: EM fitting, BIC restarts, subtypes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import artifacts
from ..errors import TooFewPoints

CLASS_LABELS = ("normal", "pneumonia", "covid")
SUBTYPE_PREFIX = {"normal": "N", "pneumonia": "P", "covid": "C"}

DEFAULT_RESTARTS = 100
DEFAULT_REG = 0.1
EM_REL_TOL = 1e-7
EM_MAX_ITER = 500


@dataclass
class MixtureModel:
    """One class's k-component 2D mixture plus fit metadata."""

    weights: np.ndarray   # (k,)
    means: np.ndarray     # (k, 2)
    covs: np.ndarray      # (k, 2, 2)
    reg: float
    bic: float = float("nan")
    log_likelihood: float = float("nan")
    n_iter: int = 0
    restarts: int = 1
    ll_monotone: bool = True

    @property
    def k(self) -> int:
        return len(self.weights)


@dataclass
class GmmModel2D:
    mixtures: dict
    reg: float = DEFAULT_REG
    restarts: int = DEFAULT_RESTARTS
    seed: int = 0


@dataclass
class SubtypeAssignment:
    label: str
    posterior: np.ndarray
    coords: np.ndarray = field(default_factory=lambda: np.zeros(2))


def _log_gauss_2d(points: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """Closed-form 2x2 multivariate normal log density."""
    a, b = cov[0, 0], cov[0, 1]
    c, d = cov[1, 0], cov[1, 1]
    det = a * d - b * c
    dx = points[:, 0] - mean[0]
    dy = points[:, 1] - mean[1]
    # inverse of [[a, b], [c, d]] scaled by 1/det
    quad = (d * dx * dx - (b + c) * dx * dy + a * dy * dy) / det
    return -np.log(2.0 * np.pi) - 0.5 * np.log(det) - 0.5 * quad


def _component_log_densities(mix: MixtureModel, points: np.ndarray) -> np.ndarray:
    out = np.empty((points.shape[0], mix.k))
    for j in range(mix.k):
        out[:, j] = np.log(np.maximum(mix.weights[j], 1e-300)) + \
            _log_gauss_2d(points, mix.means[j], mix.covs[j])
    return out


def _logsumexp(rows: np.ndarray) -> np.ndarray:
    m = rows.max(axis=1, keepdims=True)
    return (m + np.log(np.exp(rows - m).sum(axis=1, keepdims=True))).ravel()


def em_loglik(mix: MixtureModel, points: np.ndarray) -> float:
    """Total log mixture density of the points under the model."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return float(_logsumexp(_component_log_densities(mix, points)).sum())


def mixture_param_count(k: int) -> int:
    # per component: 2 mean + 3 covariance + 1 weight, minus the simplex constraint
    return k * 6 - 1


def _m_step(points: np.ndarray, resp: np.ndarray, reg: float) -> MixtureModel:
    n, k = resp.shape
    nk = np.maximum(resp.sum(axis=0), 1e-12)
    weights = nk / n
    means = (resp.T @ points) / nk[:, None]
    covs = np.empty((k, 2, 2))
    for j in range(k):
        diff = points - means[j]
        covs[j] = (resp[:, j][:, None] * diff).T @ diff / nk[j]
        covs[j][0, 0] += reg
        covs[j][1, 1] += reg
    return MixtureModel(weights=weights, means=means, covs=covs, reg=reg)


def _em_single(points: np.ndarray, k: int, reg: float, rng) -> MixtureModel:
    n = points.shape[0]
    assignment = rng.integers(0, k, size=n)
    for j in range(k):
        if not (assignment == j).any():
            assignment[rng.integers(0, n)] = j
    resp = np.zeros((n, k))
    resp[np.arange(n), assignment] = 1.0

    mix = _m_step(points, resp, reg)
    prev_ll = -np.inf
    monotone = True
    n_iter = 0
    for n_iter in range(1, EM_MAX_ITER + 1):
        log_dens = _component_log_densities(mix, points)
        totals = _logsumexp(log_dens)
        ll = float(totals.sum())
        if ll < prev_ll - 1e-9 * max(1.0, abs(prev_ll)):
            monotone = False
        if np.isfinite(prev_ll) and abs(ll - prev_ll) < EM_REL_TOL * max(1.0, abs(ll)):
            prev_ll = ll
            break
        prev_ll = ll
        resp = np.exp(log_dens - totals[:, None])
        mix = _m_step(points, resp, reg)
    mix.log_likelihood = prev_ll
    mix.bic = -2.0 * prev_ll + mixture_param_count(k) * np.log(n)
    mix.n_iter = n_iter
    mix.ll_monotone = monotone
    return mix


def _sort_components(mix: MixtureModel) -> MixtureModel:
    """Deterministic component order: descending weight, then mean coords."""
    order = sorted(range(mix.k),
                   key=lambda j: (-mix.weights[j], mix.means[j, 0], mix.means[j, 1]))
    mix.weights = mix.weights[order]
    mix.means = mix.means[order]
    mix.covs = mix.covs[order]
    return mix


def fit_mixture(points: np.ndarray, k: int = 3, restarts: int = DEFAULT_RESTARTS,
                reg: float = DEFAULT_REG, seed: int = 0) -> MixtureModel:
    """Best-of-restarts EM fit selected by BIC.

    Each restart initializes responsibilities from a seeded random hard
    assignment; the covariance regularizer is added to the diagonals at
    every M step, so eigenvalues stay at or above `reg`.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValueError("points must be (n, 2)")
    if points.shape[0] < k:
        raise TooFewPoints(f"need at least {k} points, got {points.shape[0]}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, restarts)):
        candidate = _em_single(points, k, reg, rng)
        if best is None or candidate.bic < best.bic:
            best = candidate
    best.restarts = max(1, restarts)
    return _sort_components(best)


def gmm_fit(points_by_class: dict, k: int = 3, restarts: int = DEFAULT_RESTARTS,
            reg: float = DEFAULT_REG, seed: int = 0) -> GmmModel2D:
    """Fit one k-component mixture per diagnostic class."""
    mixtures = {}
    for offset, label in enumerate(CLASS_LABELS):
        if label not in points_by_class:
            continue
        mixtures[label] = fit_mixture(np.asarray(points_by_class[label]),
                                      k=k, restarts=restarts, reg=reg,
                                      seed=seed + offset)
    return GmmModel2D(mixtures=mixtures, reg=reg, restarts=restarts, seed=seed)


def gmm_predict_subtype(model: GmmModel2D, point, class_label: str) -> SubtypeAssignment:
    """Posterior over the decided class's components; argmax names the subtype."""
    mix = model.mixtures[class_label]
    pt = np.asarray(point, dtype=np.float64).reshape(1, 2)
    log_dens = _component_log_densities(mix, pt)[0]
    log_norm = log_dens - log_dens.max()
    post = np.exp(log_norm)
    post /= post.sum()
    idx = int(np.argmax(post))
    label = f"{SUBTYPE_PREFIX[class_label]}{idx + 1}"
    return SubtypeAssignment(label=label, posterior=post, coords=pt[0])


def subtype_labels(class_label: str, k: int = 3):
    return [f"{SUBTYPE_PREFIX[class_label]}{i + 1}" for i in range(k)]


def save_gmm(path, model: GmmModel2D, meta: dict | None = None) -> str:
    doc = dict(meta or {})
    doc.update({
        "classes": list(model.mixtures),
        "reg": model.reg,
        "restarts": model.restarts,
        "seed": model.seed,
        "bic": {label: mix.bic for label, mix in model.mixtures.items()},
        "log_likelihood": {label: mix.log_likelihood
                           for label, mix in model.mixtures.items()},
    })
    tensors = {}
    for label, mix in model.mixtures.items():
        tensors[f"{label}.weights"] = mix.weights
        tensors[f"{label}.means"] = mix.means
        tensors[f"{label}.covs"] = mix.covs
    return artifacts.save_artifact(path, "gmm2d", doc, tensors)


def load_gmm(path) -> GmmModel2D:
    art = artifacts.load_artifact(path, expect_kind="gmm2d")
    mixtures = {}
    for label in art.meta["classes"]:
        mixtures[label] = MixtureModel(
            weights=art.tensors[f"{label}.weights"].astype(np.float64),
            means=art.tensors[f"{label}.means"].astype(np.float64),
            covs=art.tensors[f"{label}.covs"].astype(np.float64),
            reg=float(art.meta["reg"]),
            bic=float(art.meta["bic"][label]),
            log_likelihood=float(art.meta["log_likelihood"][label]),
        )
    return GmmModel2D(mixtures=mixtures, reg=float(art.meta["reg"]),
                      restarts=int(art.meta["restarts"]), seed=int(art.meta["seed"]))
