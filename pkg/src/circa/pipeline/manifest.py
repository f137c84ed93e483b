"""Dataset manifests as JSON-lines, one case per line."""

from __future__ import annotations

import json
from dataclasses import dataclass

SCHEMA_VERSION = 1


@dataclass
class ManifestEntry:
    case_id: str
    path: str = ""
    label: str | None = None
    dataset: str = "default"
    subtype: str | None = None
    coords: tuple | None = None
    synthetic: bool = False

    def to_dict(self) -> dict:
        doc = {"schema_version": SCHEMA_VERSION, "id": self.case_id,
               "file": self.path, "dataset": self.dataset,
               "synthetic": self.synthetic}
        if self.label is not None:
            doc["label"] = self.label
        if self.subtype is not None:
            doc["subtype"] = self.subtype
        if self.coords is not None:
            doc["coords"] = [float(self.coords[0]), float(self.coords[1])]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ManifestEntry":
        coords = doc.get("coords")
        return cls(case_id=doc["id"], path=doc.get("file", ""),
                   label=doc.get("label"), dataset=doc.get("dataset", "default"),
                   subtype=doc.get("subtype"),
                   coords=tuple(coords) if coords is not None else None,
                   synthetic=bool(doc.get("synthetic", False)))


def write_manifest(path, entries) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry.to_dict(), sort_keys=True))
            fh.write("\n")


def read_manifest(path):
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                entries.append(ManifestEntry.from_dict(json.loads(line)))
    return entries


def iter_manifest(path):
    """Streaming reader for corpus-scale manifests."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield ManifestEntry.from_dict(json.loads(line))
