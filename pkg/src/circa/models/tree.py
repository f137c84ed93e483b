"""CART aggregation tree over the two branches' class probabilities."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import artifacts
from ..errors import EmptyDataset, ShapeMismatch
from .gmm import CLASS_LABELS

N_CLASSES = 3
SEVERITY_ORDER = (2, 1, 0)  # covid > pneumonia > normal on ties


@dataclass
class TreeConfig:
    max_depth: int = 7
    min_leaf: int = 100
    features_per_split: int = 3
    class_weights: tuple = (0.1, 0.3, 0.9)
    seed: int = 0


@dataclass
class TreeNode:
    counts: np.ndarray
    probs: np.ndarray
    n_samples: int
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass
class DecisionTreeModel:
    root: TreeNode
    config: TreeConfig = field(default_factory=TreeConfig)
    n_features: int = 6

    def depth(self) -> int:
        def walk(node, d):
            if node.is_leaf:
                return d
            return max(walk(node.left, d + 1), walk(node.right, d + 1))
        return walk(self.root, 0)

    def leaves(self):
        out = []

        def walk(node):
            if node.is_leaf:
                out.append(node)
            else:
                walk(node.left)
                walk(node.right)
        walk(self.root)
        return out


def weighted_gini(counts: np.ndarray, class_weights) -> float:
    """Gini impurity of class-weighted counts: 1 - sum((w_c n_c / W)^2)."""
    total = 0.0
    for c in range(N_CLASSES):
        total += class_weights[c] * counts[c]
    if total <= 0.0:
        return 0.0
    acc = 0.0
    for c in range(N_CLASSES):
        acc += (class_weights[c] * counts[c] / total) ** 2
    return 1.0 - acc


def _leaf_probs(counts: np.ndarray, class_weights) -> np.ndarray:
    wn = np.asarray(class_weights, dtype=np.float64) * counts
    total = wn.sum()
    if total <= 0.0:
        return np.full(N_CLASSES, 1.0 / N_CLASSES)
    return wn / total


def _best_split(x: np.ndarray, y: np.ndarray, feature_ids, class_weights,
                min_leaf: int):
    """Minimal child-weighted Gini among midpoint thresholds.

    Ties break toward the lower feature index, then the lower threshold;
    candidates leaving a child below min_leaf are skipped.
    """
    n = x.shape[0]
    best = None  # (score, feature, threshold)
    for f in feature_ids:
        order = np.argsort(x[:, f], kind="stable")
        xs = x[order, f]
        ys = y[order]
        prefix = np.zeros((n + 1, N_CLASSES), dtype=np.int64)
        for i in range(n):
            prefix[i + 1] = prefix[i]
            prefix[i + 1, ys[i]] += 1
        for i in range(n - 1):
            if xs[i] == xs[i + 1]:
                continue
            left_n = i + 1
            right_n = n - left_n
            if left_n < min_leaf or right_n < min_leaf:
                continue
            threshold = (xs[i] + xs[i + 1]) / 2.0
            left_counts = prefix[left_n]
            right_counts = prefix[n] - prefix[left_n]
            wl = 0.0
            wr = 0.0
            for c in range(N_CLASSES):
                wl += class_weights[c] * left_counts[c]
                wr += class_weights[c] * right_counts[c]
            score = (wl * weighted_gini(left_counts, class_weights)
                     + wr * weighted_gini(right_counts, class_weights)) / (wl + wr) \
                if (wl + wr) > 0 else 0.0
            if best is None or score < best[0]:
                best = (score, f, threshold)
    return best


def tree_fit(x: np.ndarray, y: np.ndarray, config: TreeConfig | None = None) -> DecisionTreeModel:
    """Greedy CART with per-node feature subsampling.

    At each node, features_per_split features are drawn without replacement
    from a generator seeded by config.seed, consumed in pre-order, and
    searched in ascending index order. Splits minimize the class-weighted
    Gini of the children; stopping is by depth, purity, or min_leaf.
    """
    config = config or TreeConfig()
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.intp)
    if x.ndim != 2 or x.shape[0] == 0:
        raise EmptyDataset("tree training requires at least one sample")
    n_features = x.shape[1]
    rng = np.random.default_rng(config.seed)
    m = min(config.features_per_split, n_features)

    def build(idx: np.ndarray, depth: int) -> TreeNode:
        counts = np.bincount(y[idx], minlength=N_CLASSES).astype(np.int64)
        node = TreeNode(counts=counts, probs=_leaf_probs(counts, config.class_weights),
                        n_samples=int(idx.size))
        pure = int((counts > 0).sum()) <= 1
        if depth >= config.max_depth or pure or idx.size < 2 * config.min_leaf:
            return node
        if m < n_features:
            feats = np.sort(rng.choice(n_features, size=m, replace=False))
        else:
            feats = np.arange(n_features)
        best = _best_split(x[idx], y[idx], feats, config.class_weights,
                           config.min_leaf)
        if best is None:
            return node
        _, f, threshold = best
        go_left = x[idx, f] <= threshold
        node.feature = int(f)
        node.threshold = float(threshold)
        node.left = build(idx[go_left], depth + 1)
        node.right = build(idx[~go_left], depth + 1)
        return node

    root = build(np.arange(x.shape[0]), 0)
    return DecisionTreeModel(root=root, config=config, n_features=n_features)


def tree_predict(model: DecisionTreeModel, x: np.ndarray) -> np.ndarray:
    """Route by threshold comparisons (<= goes left); leaf probabilities."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != model.n_features:
        raise ShapeMismatch(f"expected {model.n_features} features, got {x.size}")
    node = model.root
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.probs.copy()


def decide_class(probs) -> str:
    """Maximum-probability class; ties resolve covid > pneumonia > normal."""
    probs = np.asarray(probs, dtype=np.float64)
    best = SEVERITY_ORDER[0]
    for c in SEVERITY_ORDER[1:]:
        if probs[c] > probs[best]:
            best = c
    return CLASS_LABELS[best]


def save_tree(path, model: DecisionTreeModel, meta: dict | None = None) -> str:
    # pre-order flattening with child indices
    entries = []

    def walk(node):
        pos = len(entries)
        entries.append([node, -1, -1])
        if not node.is_leaf:
            entries[pos][1] = walk(node.left)
            entries[pos][2] = walk(node.right)
        return pos

    walk(model.root)
    n = len(entries)
    feature = np.full(n, -1, dtype=np.int64)
    threshold = np.full(n, np.nan)
    left = np.full(n, -1, dtype=np.int64)
    right = np.full(n, -1, dtype=np.int64)
    counts = np.zeros((n, N_CLASSES), dtype=np.int64)
    probs = np.zeros((n, N_CLASSES))
    n_samples = np.zeros(n, dtype=np.int64)
    for i, (node, li, ri) in enumerate(entries):
        if not node.is_leaf:
            feature[i] = node.feature
            threshold[i] = node.threshold
        left[i] = li
        right[i] = ri
        counts[i] = node.counts
        probs[i] = node.probs
        n_samples[i] = node.n_samples
    doc = dict(meta or {})
    doc.update({
        "n_features": model.n_features,
        "config": {
            "max_depth": model.config.max_depth,
            "min_leaf": model.config.min_leaf,
            "features_per_split": model.config.features_per_split,
            "class_weights": list(model.config.class_weights),
            "seed": model.config.seed,
        },
    })
    return artifacts.save_artifact(path, "decision_tree", doc, {
        "feature": feature, "threshold": threshold, "left": left,
        "right": right, "counts": counts, "probs": probs,
        "n_samples": n_samples,
    })


def load_tree(path) -> DecisionTreeModel:
    art = artifacts.load_artifact(path, expect_kind="decision_tree")
    feature = art.tensors["feature"].astype(np.int64)
    threshold = art.tensors["threshold"].astype(np.float64)
    left = art.tensors["left"].astype(np.int64)
    right = art.tensors["right"].astype(np.int64)
    counts = art.tensors["counts"].astype(np.int64)
    probs = art.tensors["probs"].astype(np.float64)
    n_samples = art.tensors["n_samples"].astype(np.int64)

    def rebuild(i: int) -> TreeNode:
        node = TreeNode(counts=counts[i], probs=probs[i],
                        n_samples=int(n_samples[i]))
        if feature[i] >= 0:
            node.feature = int(feature[i])
            node.threshold = float(threshold[i])
            node.left = rebuild(int(left[i]))
            node.right = rebuild(int(right[i]))
        return node

    cfg = art.meta["config"]
    config = TreeConfig(max_depth=int(cfg["max_depth"]),
                        min_leaf=int(cfg["min_leaf"]),
                        features_per_split=int(cfg["features_per_split"]),
                        class_weights=tuple(cfg["class_weights"]),
                        seed=int(cfg["seed"]))
    return DecisionTreeModel(root=rebuild(0), config=config,
                             n_features=int(art.meta["n_features"]))
