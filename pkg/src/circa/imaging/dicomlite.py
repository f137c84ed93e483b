"""Minimal DICOM part-10 reader for monochrome radiographs.

Covers the little-endian transfer syntaxes (implicit VR, explicit VR) and
baseline-JPEG encapsulation; parses only the attributes needed to
materialize the pixel array and skips everything else, including nested
sequences. Intentionally not a general DICOM toolkit.
"""

from __future__ import annotations

import io
import struct

import numpy as np
from PIL import Image

from ..errors import CorruptStream, NonImageDicom, UnsupportedFormat

IMPLICIT_VR_LE = "1.2.840.10008.1.2"
EXPLICIT_VR_LE = "1.2.840.10008.1.2.1"
JPEG_BASELINE = "1.2.840.10008.1.2.4.50"

# VRs that use the 12-byte explicit header (2 reserved + 4-byte length).
_LONG_VRS = {b"OB", b"OW", b"OF", b"OD", b"OL", b"SQ", b"UC", b"UR", b"UT", b"UN"}

_TAG_SAMPLES = (0x0028, 0x0002)
_TAG_PHOTOMETRIC = (0x0028, 0x0004)
_TAG_ROWS = (0x0028, 0x0010)
_TAG_COLS = (0x0028, 0x0011)
_TAG_BITS_ALLOCATED = (0x0028, 0x0100)
_TAG_BITS_STORED = (0x0028, 0x0101)
_TAG_PIXEL_REPRESENTATION = (0x0028, 0x0103)
_TAG_PIXEL_DATA = (0x7FE0, 0x0010)
_TAG_TRANSFER_SYNTAX = (0x0002, 0x0010)


class _Cursor:
    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def remaining(self) -> int:
        return len(self.data) - self.pos

    def read(self, n: int) -> bytes:
        if self.remaining() < n:
            raise CorruptStream("truncated DICOM stream")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u16(self) -> int:
        return struct.unpack("<H", self.read(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.read(4))[0]

    def peek_tag(self) -> tuple[int, int]:
        if self.remaining() < 4:
            raise CorruptStream("truncated DICOM stream")
        return struct.unpack_from("<HH", self.data, self.pos)


def is_dicom(data: bytes) -> bool:
    return len(data) > 132 and data[128:132] == b"DICM"


def _read_element_header(cur: _Cursor, explicit: bool):
    group = cur.u16()
    elem = cur.u16()
    if explicit:
        vr = cur.read(2)
        if vr in _LONG_VRS:
            cur.read(2)
            length = cur.u32()
        else:
            length = cur.u16()
    else:
        vr = b"UN"
        length = cur.u32()
    return (group, elem), vr, length


def _skip_undefined_length(cur: _Cursor) -> None:
    """Skip an undefined-length sequence or pixel-data item structure."""
    depth = 1
    while depth > 0:
        group = cur.u16()
        elem = cur.u16()
        length = cur.u32()
        if (group, elem) == (0xFFFE, 0xE0DD):  # sequence delimiter
            depth -= 1
        elif (group, elem) == (0xFFFE, 0xE000):  # item
            if length == 0xFFFFFFFF:
                depth += 1  # item of undefined length: wait for its delimiter
            else:
                cur.read(length)
        elif (group, elem) == (0xFFFE, 0xE00D):  # item delimiter
            if depth > 1:
                depth -= 1
        else:
            raise CorruptStream("malformed undefined-length sequence")


def _read_encapsulated_fragments(cur: _Cursor) -> bytes:
    """Concatenate pixel-data fragments, skipping the basic offset table."""
    fragments = []
    first = True
    while True:
        group = cur.u16()
        elem = cur.u16()
        length = cur.u32()
        if (group, elem) == (0xFFFE, 0xE0DD):
            break
        if (group, elem) != (0xFFFE, 0xE000):
            raise CorruptStream("malformed encapsulated pixel data")
        payload = cur.read(length)
        if first:
            first = False  # basic offset table, possibly empty
            continue
        fragments.append(payload)
    if not fragments:
        raise CorruptStream("encapsulated pixel data without fragments")
    return b"".join(fragments)


def _parse_file_meta(cur: _Cursor) -> str:
    """Read the group-0002 file meta (always explicit VR LE)."""
    transfer_syntax = EXPLICIT_VR_LE
    while cur.remaining() >= 8:
        group, _ = cur.peek_tag()
        if group != 0x0002:
            break
        tag, vr, length = _read_element_header(cur, explicit=True)
        value = cur.read(length)
        if tag == _TAG_TRANSFER_SYNTAX:
            transfer_syntax = value.decode("ascii", "replace").strip("\x00 ")
    return transfer_syntax


def decode_dicom(data: bytes) -> np.ndarray:
    """Decode a monochrome DICOM stream to a [0,1] raster."""
    if not is_dicom(data):
        raise CorruptStream("missing DICM marker")
    cur = _Cursor(data, pos=132)
    ts = _parse_file_meta(cur)
    if ts not in (IMPLICIT_VR_LE, EXPLICIT_VR_LE, JPEG_BASELINE):
        raise UnsupportedFormat(f"unsupported transfer syntax {ts}")
    explicit = ts != IMPLICIT_VR_LE

    attrs = {}
    pixel_payload = None
    encapsulated = False
    while cur.remaining() >= 8:
        tag, vr, length = _read_element_header(cur, explicit)
        if tag == _TAG_PIXEL_DATA:
            if length == 0xFFFFFFFF:
                encapsulated = True
                pixel_payload = _read_encapsulated_fragments(cur)
            else:
                pixel_payload = cur.read(length)
            break
        if length == 0xFFFFFFFF or vr == b"SQ":
            if length == 0xFFFFFFFF:
                _skip_undefined_length(cur)
            else:
                cur.read(length)
            continue
        value = cur.read(length)
        if tag in (_TAG_SAMPLES, _TAG_ROWS, _TAG_COLS, _TAG_BITS_ALLOCATED,
                   _TAG_BITS_STORED, _TAG_PIXEL_REPRESENTATION):
            if len(value) < 2:
                raise CorruptStream(f"short US value for tag {tag}")
            attrs[tag] = struct.unpack("<H", value[:2])[0]
        elif tag == _TAG_PHOTOMETRIC:
            attrs[tag] = value.decode("ascii", "replace").strip("\x00 ")

    if pixel_payload is None:
        raise NonImageDicom("no pixel data element")

    samples = attrs.get(_TAG_SAMPLES, 1)
    if samples != 1:
        raise UnsupportedFormat(f"samples per pixel {samples}; monochrome only")
    photometric = attrs.get(_TAG_PHOTOMETRIC, "MONOCHROME2")
    if photometric not in ("MONOCHROME1", "MONOCHROME2"):
        raise UnsupportedFormat(f"photometric interpretation {photometric}")

    if encapsulated:
        img = _decode_jpeg_fragment(pixel_payload)
    else:
        img = _decode_native(pixel_payload, attrs)

    if photometric == "MONOCHROME1":
        img = 1.0 - img
    return img


def _decode_native(payload: bytes, attrs: dict) -> np.ndarray:
    rows = attrs.get(_TAG_ROWS)
    cols = attrs.get(_TAG_COLS)
    if not rows or not cols:
        raise CorruptStream("pixel data without rows/columns")
    bits_allocated = attrs.get(_TAG_BITS_ALLOCATED, 16)
    bits_stored = attrs.get(_TAG_BITS_STORED, bits_allocated)
    signed = attrs.get(_TAG_PIXEL_REPRESENTATION, 0) == 1
    if bits_allocated == 8:
        dtype = np.int8 if signed else np.uint8
    elif bits_allocated == 16:
        dtype = np.int16 if signed else np.uint16
    else:
        raise UnsupportedFormat(f"bits allocated {bits_allocated}")
    needed = rows * cols * (bits_allocated // 8)
    if len(payload) < needed:
        raise CorruptStream("pixel data shorter than rows*columns")
    arr = np.frombuffer(payload[:needed], dtype=np.dtype(dtype).newbyteorder("<"))
    arr = arr.reshape(rows, cols).astype(np.float64)
    if signed:
        arr = arr + float(2 ** (bits_stored - 1))
    full_scale = float(2 ** bits_stored - 1)
    return np.clip(arr / full_scale, 0.0, 1.0)


def _decode_jpeg_fragment(payload: bytes) -> np.ndarray:
    try:
        with Image.open(io.BytesIO(payload)) as im:
            im.load()
            arr = np.asarray(im.convert("L"), dtype=np.float64)
    except Exception as exc:
        raise CorruptStream(f"cannot decode JPEG fragment: {exc}") from None
    return arr / 255.0
