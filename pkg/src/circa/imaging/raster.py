"""Raster conventions and PNG I/O.

A raster is a 2-D float64 numpy array, row-major, intensities in [0, 1].
A mask is a 2-D bool numpy array of the same layout.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image

from ..errors import CorruptStream


def validate_raster(img: np.ndarray) -> np.ndarray:
    """Check raster invariants and return the array as float64."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("raster must be 2-D with positive dimensions")
    if not np.isfinite(img).all():
        raise ValueError("raster contains non-finite values")
    if float(img.min()) < 0.0 or float(img.max()) > 1.0:
        raise ValueError("raster values must lie in [0, 1]")
    return img


def validate_mask(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.dtype != np.bool_:
        raise ValueError("mask must be boolean")
    if mask.ndim != 2 or mask.shape[0] < 1 or mask.shape[1] < 1:
        raise ValueError("mask must be 2-D with positive dimensions")
    return mask


def raster_to_png_bytes(img: np.ndarray, bit_depth: int = 8) -> bytes:
    """Encode a [0,1] raster as an 8- or 16-bit grayscale PNG."""
    img = validate_raster(img)
    buf = io.BytesIO()
    if bit_depth == 8:
        arr = np.round(img * 255.0).astype(np.uint8)
        Image.fromarray(arr, mode="L").save(buf, format="PNG")
    elif bit_depth == 16:
        arr = np.round(img * 65535.0).astype(np.uint16)
        Image.fromarray(arr).save(buf, format="PNG")
    else:
        raise ValueError("bit_depth must be 8 or 16")
    return buf.getvalue()


def mask_to_png_bytes(mask: np.ndarray) -> bytes:
    """Encode a boolean mask as a 1-bit PNG."""
    mask = validate_mask(mask)
    buf = io.BytesIO()
    Image.fromarray(mask).convert("1").save(buf, format="PNG")
    return buf.getvalue()


def png_bytes_to_mask(data: bytes) -> np.ndarray:
    """Decode a 1-bit (or grayscale) PNG back into a boolean mask."""
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            arr = np.asarray(im.convert("L"))
    except Exception as exc:
        raise CorruptStream(f"cannot decode mask PNG: {exc}") from None
    return arr > 127
