"""Decoding of PNG/JPEG/DICOM uploads into [0,1] rasters."""

from __future__ import annotations

import io

import numpy as np
from PIL import Image

from ..errors import CorruptStream, UnsupportedFormat
from . import dicomlite

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_JPEG_MAGIC = b"\xff\xd8\xff"


def sniff_format(data: bytes) -> str | None:
    if data.startswith(_PNG_MAGIC):
        return "png"
    if data.startswith(_JPEG_MAGIC):
        return "jpeg"
    if dicomlite.is_dicom(data):
        return "dicom"
    return None


def decode_image(data: bytes, format_hint: str | None = None) -> np.ndarray:
    """Decode encoded image bytes to a grayscale [0,1] raster.

    Multi-channel sources are reduced by averaging the color channels;
    intensities are mapped linearly from the source bit depth. DICOM
    MONOCHROME1 is inverted so that higher always means brighter.
    """
    if not data:
        raise CorruptStream("empty stream")
    fmt = format_hint.lower() if format_hint else sniff_format(data)
    if fmt in ("jpg", "application/dicom", "image/png", "image/jpeg"):
        fmt = {"jpg": "jpeg", "application/dicom": "dicom",
               "image/png": "png", "image/jpeg": "jpeg"}[fmt]
    if fmt is None:
        raise UnsupportedFormat("unrecognized image format")
    if fmt == "dicom":
        return dicomlite.decode_dicom(data)
    if fmt in ("png", "jpeg"):
        return _decode_pil(data)
    raise UnsupportedFormat(f"unknown format hint {fmt!r}")


def _decode_pil(data: bytes) -> np.ndarray:
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            return _pil_to_raster(im)
    except (UnsupportedFormat, CorruptStream):
        raise
    except Exception as exc:
        raise CorruptStream(f"cannot decode image: {exc}") from None


def _pil_to_raster(im: Image.Image) -> np.ndarray:
    mode = im.mode
    if mode == "1":
        return np.asarray(im, dtype=np.float64)
    if mode == "L":
        return np.asarray(im, dtype=np.float64) / 255.0
    if mode in ("I;16", "I;16L", "I;16B"):
        return np.asarray(im, dtype=np.float64) / 65535.0
    if mode == "I":
        # 16-bit grayscale PNGs surface as 32-bit int in some Pillow builds.
        arr = np.asarray(im, dtype=np.float64)
        return np.clip(arr / 65535.0, 0.0, 1.0)
    if mode == "P":
        im = im.convert("RGB")
        mode = "RGB"
    if mode in ("RGB", "RGBA", "LA"):
        arr = np.asarray(im, dtype=np.float64)
        channels = 3 if mode in ("RGB", "RGBA") else 1
        return arr[..., :channels].mean(axis=2) / 255.0
    raise UnsupportedFormat(f"unsupported pixel mode {mode}")
