"""Binary artifact container: versioned JSON header + little-endian payload.

Layout: 8-byte magic, u32 header length, UTF-8 JSON header, raw tensor
payload. The header records the artifact kind, free-form metadata, tensor
descriptors (name, dtype, shape, offset) and the sha256 of the payload,
which is verified on load.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArtifactError

MAGIC = b"CIRCARTF"
FORMAT_VERSION = 1

_ALLOWED_DTYPES = {"<f4", "<f8", "<i4", "<i8"}


@dataclass
class Artifact:
    kind: str
    meta: dict
    tensors: dict


def save_artifact(path, kind: str, meta: dict, tensors: dict) -> str:
    """Write an artifact file; returns the payload sha256 hex digest."""
    descriptors = []
    chunks = []
    offset = 0
    for name, arr in tensors.items():
        arr = np.asarray(arr)
        if arr.dtype.kind == "f":
            dtype = "<f4" if arr.dtype.itemsize <= 4 else "<f8"
        elif arr.dtype.kind in "iub":
            dtype = "<i4" if arr.dtype.itemsize <= 4 else "<i8"
        else:
            raise ArtifactError(f"unsupported tensor dtype {arr.dtype}")
        raw = np.ascontiguousarray(arr.astype(np.dtype(dtype))).tobytes()
        descriptors.append({
            "name": name,
            "dtype": dtype,
            "shape": list(arr.shape),
            "offset": offset,
            "nbytes": len(raw),
        })
        chunks.append(raw)
        offset += len(raw)
    payload = b"".join(chunks)
    digest = hashlib.sha256(payload).hexdigest()
    header = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "meta": meta,
        "tensors": descriptors,
        "payload_sha256": digest,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(header_bytes).to_bytes(4, "little"))
        fh.write(header_bytes)
        fh.write(payload)
    return digest


def load_artifact(path, expect_kind: str | None = None) -> Artifact:
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:8] != MAGIC:
        raise ArtifactError(f"{path}: not an artifact file")
    header_len = int.from_bytes(data[8:12], "little")
    try:
        header = json.loads(data[12:12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ArtifactError(f"{path}: malformed header ({exc})") from None
    if header.get("format_version") != FORMAT_VERSION:
        raise ArtifactError(f"{path}: unsupported format version")
    payload = data[12 + header_len:]
    digest = hashlib.sha256(payload).hexdigest()
    if digest != header.get("payload_sha256"):
        raise ArtifactError(f"{path}: payload checksum mismatch")
    kind = header.get("kind", "")
    if expect_kind is not None and kind != expect_kind:
        raise ArtifactError(f"{path}: expected kind {expect_kind!r}, found {kind!r}")
    tensors = {}
    for d in header.get("tensors", []):
        if d["dtype"] not in _ALLOWED_DTYPES:
            raise ArtifactError(f"{path}: bad tensor dtype {d['dtype']}")
        start, nbytes = d["offset"], d["nbytes"]
        if start + nbytes > len(payload):
            raise ArtifactError(f"{path}: tensor {d['name']} out of bounds")
        arr = np.frombuffer(payload[start:start + nbytes], dtype=np.dtype(d["dtype"]))
        tensors[d["name"]] = arr.reshape(d["shape"]).copy()
    return Artifact(kind=kind, meta=header.get("meta", {}), tensors=tensors)


def artifact_checksum(path) -> str:
    """Stored payload checksum without loading tensors."""
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) < 12 or head[:8] != MAGIC:
            raise ArtifactError(f"{path}: not an artifact file")
        header_len = int.from_bytes(head[8:12], "little")
        header = json.loads(fh.read(header_len).decode("utf-8"))
    return header["payload_sha256"]
