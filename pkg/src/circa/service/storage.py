"""Case persistence: content-addressed blobs + append-only JSONL index."""

from __future__ import annotations

import hashlib
import json
import threading
from pathlib import Path


class CaseStore:
    """Append-only store; records are never mutated after insertion.

    Blobs live under blobs/<sha256>; the case index is a JSON-lines file
    with one committed record per line, guarded by a single writer lock.
    """

    def __init__(self, root):
        self.root = Path(root)
        self.blob_dir = self.root / "blobs"
        self.index_path = self.root / "cases.jsonl"
        self.blob_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._cases = {}
        if self.index_path.exists():
            with open(self.index_path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        record = json.loads(line)
                        self._cases[record["id"]] = record

    def put_blob(self, data: bytes) -> str:
        digest = hashlib.sha256(data).hexdigest()
        path = self.blob_dir / digest
        if not path.exists():
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(data)
            tmp.replace(path)
        return digest

    def get_blob(self, digest: str) -> bytes:
        path = self.blob_dir / digest
        if not path.exists():
            raise KeyError(digest)
        return path.read_bytes()

    def add_case(self, record: dict) -> None:
        if "id" not in record:
            raise ValueError("case record needs an id")
        with self._lock:
            if record["id"] in self._cases:
                raise ValueError(f"case {record['id']} already stored")
            with open(self.index_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True))
                fh.write("\n")
            self._cases[record["id"]] = record

    def get_case(self, case_id: str):
        return self._cases.get(case_id)

    def case_count(self) -> int:
        return len(self._cases)

    def verified_manifest(self):
        """Verified-case export for growing future training manifests."""
        return [
            {"id": r["id"], "label": r["verified_label"],
             "image_blob": r["image_blob"], "submitted_at": r["created_at"]}
            for r in self._cases.values() if r.get("verified_label")
        ]
