"""Canonical JSON: sorted keys, 9-significant-digit floats, no NaN.

Used for golden fixtures and persisted results so byte-level comparisons
are meaningful across runs and platforms. Keys listed in drop_keys
(stage timings by default) are excluded, since wall-clock durations are
metadata, not part of the deterministic payload.
"""

from __future__ import annotations

import json
import math

DEFAULT_DROP_KEYS = ("timings",)


def _format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValueError("canonical JSON forbids NaN/Inf")
    if x == 0.0:
        x = 0.0  # normalize -0.0
    text = format(x, ".9g")
    # keep a numeric token (format can emit bare integers)
    return text


def _write(obj, out: list, drop_keys: tuple) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=True))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_format_float(obj))
    elif isinstance(obj, dict):
        out.append("{")
        first = True
        for key in sorted(obj):
            if key in drop_keys:
                continue
            if not first:
                out.append(",")
            first = False
            out.append(json.dumps(str(key), ensure_ascii=True))
            out.append(":")
            _write(obj[key], out, drop_keys)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _write(item, out, drop_keys)
        out.append("]")
    else:
        raise TypeError(f"cannot canonicalize {type(obj).__name__}")


def canonical_json(obj, drop_keys: tuple = DEFAULT_DROP_KEYS) -> str:
    out: list = []
    _write(obj, out, drop_keys)
    return "".join(out)
