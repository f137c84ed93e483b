"""Segmentation and classification evaluation.

Dice overlap, one-vs-rest diagnostics from 3-class confusion matrices,
subtype-weighted class aggregation, and manifest-level evaluation with
dataset-tag breakdowns. Rates with zero denominators are explicitly
undefined (None, serialized as null) and are excluded together with their
weight from weighted averages.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, fields

import numpy as np

from .errors import DimensionMismatch, EmptyMatrix, MissingPredictions, ZeroTotalWeight
from .models.gmm import CLASS_LABELS, SUBTYPE_PREFIX

_PREFIX_TO_CLASS = {v: k for k, v in SUBTYPE_PREFIX.items()}

RATE_FIELDS = ("ppv", "npv", "sensitivity", "specificity", "accuracy",
               "balanced_accuracy", "f1")


def dice(a: np.ndarray, b: np.ndarray) -> float:
    """Overlap similarity 2|A^B| / (|A|+|B|); two empty masks score 1."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise DimensionMismatch(f"mask shapes differ: {a.shape} vs {b.shape}")
    total = int(a.sum()) + int(b.sum())
    if total == 0:
        return 1.0
    return 2.0 * int((a & b).sum()) / total


@dataclass
class ConfusionMatrix3:
    """3x3 counts, rows = true class, columns = predicted class."""

    counts: np.ndarray

    @classmethod
    def empty(cls) -> "ConfusionMatrix3":
        return cls(np.zeros((3, 3), dtype=np.int64))

    @classmethod
    def from_pairs(cls, truths, predictions) -> "ConfusionMatrix3":
        cm = cls.empty()
        for t, p in zip(truths, predictions):
            cm.add(t, p)
        return cm

    def add(self, truth: str, predicted: str) -> None:
        self.counts[CLASS_LABELS.index(truth), CLASS_LABELS.index(predicted)] += 1

    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "ConfusionMatrix3") -> "ConfusionMatrix3":
        return ConfusionMatrix3(self.counts + other.counts)


@dataclass
class ClassMetrics:
    """One-vs-rest diagnostics; None marks an undefined rate."""

    tp: int
    fp: int
    fn: int
    tn: int
    ppv: float | None
    npv: float | None
    sensitivity: float | None
    specificity: float | None
    accuracy: float | None
    balanced_accuracy: float | None
    f1: float | None


def _rate(num: float, den: float) -> float | None:
    return num / den if den > 0 else None


def _one_vs_rest(cm: ConfusionMatrix3, class_idx: int) -> ClassMetrics:
    counts = cm.counts
    tp = int(counts[class_idx, class_idx])
    fp = int(counts[:, class_idx].sum()) - tp
    fn = int(counts[class_idx, :].sum()) - tp
    tn = cm.total() - tp - fp - fn
    ppv = _rate(tp, tp + fp)
    npv = _rate(tn, tn + fn)
    sens = _rate(tp, tp + fn)
    spec = _rate(tn, tn + fp)
    accuracy = _rate(tp + tn, cm.total())
    balanced = (sens + spec) / 2.0 if sens is not None and spec is not None else None
    if ppv is None or sens is None or (ppv + sens) == 0:
        f1 = None
    else:
        f1 = 2.0 * ppv * sens / (ppv + sens)
    return ClassMetrics(tp=tp, fp=fp, fn=fn, tn=tn, ppv=ppv, npv=npv,
                        sensitivity=sens, specificity=spec, accuracy=accuracy,
                        balanced_accuracy=balanced, f1=f1)


def class_metrics(cm: ConfusionMatrix3) -> dict:
    """Per-class one-vs-rest reports keyed by class label."""
    if cm.total() == 0:
        raise EmptyMatrix("confusion matrix has no cases")
    return {label: _one_vs_rest(cm, i) for i, label in enumerate(CLASS_LABELS)}


def weighted_class_from_subtypes(entries) -> ClassMetrics:
    """Weighted average of one class's subtype reports.

    `entries` is a sequence of (ClassMetrics, count); undefined metrics are
    excluded with their weight from that metric's average.
    """
    entries = [(m, int(c)) for m, c in entries]
    total = sum(c for _, c in entries)
    if total == 0:
        raise ZeroTotalWeight("all subtype counts are zero")
    sums = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
    for m, c in entries:
        if c == 0:
            continue
        for key in sums:
            sums[key] += getattr(m, key)
    out = dict(sums)
    for name in RATE_FIELDS:
        num = 0.0
        den = 0
        for m, c in entries:
            v = getattr(m, name)
            if c > 0 and v is not None:
                num += v * c
                den += c
        out[name] = num / den if den > 0 else None
    return ClassMetrics(**out)


@dataclass(frozen=True)
class TruthEntry:
    case_id: str
    label: str
    subtype: str | None = None
    dataset: str = "default"


@dataclass
class EvaluationReport:
    pooled: ConfusionMatrix3
    by_dataset: dict            # dataset -> ConfusionMatrix3
    by_subtype: dict            # (dataset, subtype) -> ConfusionMatrix3
    subtype_metrics: dict       # (dataset, subtype) -> {class: ClassMetrics}
    class_metrics: dict         # (dataset, class) -> ClassMetrics (subtype-weighted)
    subtype_counts: dict        # (dataset, subtype) -> int

    def to_dict(self) -> dict:
        def metrics_dict(m: ClassMetrics) -> dict:
            return {f.name: getattr(m, f.name) for f in fields(ClassMetrics)}

        return {
            "pooled_confusion": self.pooled.counts.tolist(),
            "datasets": {
                ds: cm.counts.tolist() for ds, cm in sorted(self.by_dataset.items())
            },
            "subtypes": {
                f"{ds}/{sub}": {
                    "confusion": self.by_subtype[(ds, sub)].counts.tolist(),
                    "count": self.subtype_counts[(ds, sub)],
                    "metrics": {c: metrics_dict(m)
                                for c, m in self.subtype_metrics[(ds, sub)].items()},
                }
                for ds, sub in sorted(self.by_subtype)
            },
            "classes": {
                f"{ds}/{cls}": metrics_dict(m)
                for (ds, cls), m in sorted(self.class_metrics.items())
            },
        }

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["dataset", "scope", "class", "metric", "value"])
            for (ds, sub), per_class in sorted(self.subtype_metrics.items()):
                for cls, m in per_class.items():
                    for name in RATE_FIELDS:
                        writer.writerow([ds, sub, cls, name, getattr(m, name)])
            for (ds, cls), m in sorted(self.class_metrics.items()):
                for name in RATE_FIELDS:
                    writer.writerow([ds, "class", cls, name, getattr(m, name)])


def evaluate_manifest(predictions: dict, truth_entries) -> EvaluationReport:
    """Subtype- and class-level evaluation with dataset breakdowns.

    `predictions` maps case id to predicted class label; every truth id
    must be present. Class-level metrics are the subtype-count-weighted
    averages of that class's subtype reports.
    """
    truth_entries = list(truth_entries)
    missing = [t.case_id for t in truth_entries if t.case_id not in predictions]
    if missing:
        raise MissingPredictions(missing)

    pooled = ConfusionMatrix3.empty()
    by_dataset: dict = {}
    by_subtype: dict = {}
    subtype_counts: dict = {}
    for t in truth_entries:
        pred = predictions[t.case_id]
        pooled.add(t.label, pred)
        by_dataset.setdefault(t.dataset, ConfusionMatrix3.empty()).add(t.label, pred)
        if t.subtype is not None:
            key = (t.dataset, t.subtype)
            by_subtype.setdefault(key, ConfusionMatrix3.empty()).add(t.label, pred)
            subtype_counts[key] = subtype_counts.get(key, 0) + 1

    subtype_metrics = {key: class_metrics(cm) for key, cm in by_subtype.items()}

    class_reports: dict = {}
    for ds in by_dataset:
        for cls in CLASS_LABELS:
            prefix = SUBTYPE_PREFIX[cls]
            entries = [
                (subtype_metrics[(d, sub)][cls], subtype_counts[(d, sub)])
                for (d, sub) in by_subtype
                if d == ds and sub.startswith(prefix)
            ]
            if entries:
                class_reports[(ds, cls)] = weighted_class_from_subtypes(entries)

    return EvaluationReport(pooled=pooled, by_dataset=by_dataset,
                            by_subtype=by_subtype,
                            subtype_metrics=subtype_metrics,
                            class_metrics=class_reports,
                            subtype_counts=subtype_counts)


def subtype_class(subtype: str) -> str:
    """Class label owning a subtype name like C2."""
    return _PREFIX_TO_CLASS[subtype[0]]
