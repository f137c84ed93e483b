"""Feature-matrix persistence: CSV and the binary column store."""

from __future__ import annotations

import csv
import json

import numpy as np

from .. import artifacts


def save_matrix_csv(path, ids, matrix: np.ndarray, names, labels=None) -> None:
    """CSV with header = catalog names; optional id/label columns lead."""
    matrix = np.asarray(matrix, dtype=np.float64)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        head = ["id"] + (["label"] if labels is not None else []) + list(names)
        writer.writerow(head)
        for i, case_id in enumerate(ids):
            row = [case_id]
            if labels is not None:
                row.append(labels[i])
            row.extend(repr(float(v)) for v in matrix[i])
            writer.writerow(row)


def load_matrix_csv(path):
    """Returns (ids, labels or None, matrix, names)."""
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        has_label = len(header) > 1 and header[1] == "label"
        first_feature = 2 if has_label else 1
        names = header[first_feature:]
        ids, labels, rows = [], [], []
        for row in reader:
            ids.append(row[0])
            if has_label:
                labels.append(row[1])
            rows.append([float(v) for v in row[first_feature:]])
    matrix = np.array(rows, dtype=np.float64).reshape(len(ids), len(names))
    return ids, (labels if has_label else None), matrix, names


def save_matrix_binary(path, ids, matrix: np.ndarray, names, labels=None,
                       meta: dict | None = None) -> str:
    doc = dict(meta or {})
    doc.update({"ids": list(ids), "columns": list(names)})
    if labels is not None:
        doc["labels"] = list(labels)
    return artifacts.save_artifact(path, "feature_matrix", doc,
                                   {"values": np.asarray(matrix, dtype=np.float64)})


def load_matrix_binary(path):
    art = artifacts.load_artifact(path, expect_kind="feature_matrix")
    return (art.meta["ids"], art.meta.get("labels"),
            art.tensors["values"].astype(np.float64), art.meta["columns"])


def save_selection_report(path, report) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=1)


def load_selection_report(path):
    from .stats import SelectionReport
    with open(path, "r", encoding="utf-8") as fh:
        return SelectionReport.from_dict(json.load(fh))
