"""Minimal PNG reader/writer for label maps, masks, and renders.

Writing is deliberately restricted so output bytes are reproducible: filter
type 0 on every scanline, fixed zlib level, no interlacing, no ancillary
chunks. Reading accepts the subset the pipeline consumes - 8/16-bit
grayscale, 8-bit indexed (palette indices returned verbatim), and 8-bit RGB -
with all five scanline filters, so files written by common encoders decode
correctly.
"""

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, IoError

_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_ZLIB_LEVEL = 6

GRAY = 0
RGB = 2
INDEXED = 3


@dataclass
class PngImage:
    pixels: np.ndarray
    color_type: int
    bit_depth: int


def _chunk(tag: bytes, payload: bytes) -> bytes:
    crc = zlib.crc32(tag + payload) & 0xFFFFFFFF
    return struct.pack(">I", len(payload)) + tag + payload + struct.pack(">I", crc)


def write_png(path, array: np.ndarray) -> None:
    """Write ``array`` as a PNG; dtype/shape select the encoding.

    uint8 (H, W) -> 8-bit grayscale; uint16 (H, W) -> 16-bit grayscale;
    uint8 (H, W, 3) -> 8-bit RGB.
    """
    arr = np.asarray(array)
    if arr.dtype == np.uint8 and arr.ndim == 2:
        color_type, depth, channels = GRAY, 8, 1
    elif arr.dtype == np.uint16 and arr.ndim == 2:
        color_type, depth, channels = GRAY, 16, 1
    elif arr.dtype == np.uint8 and arr.ndim == 3 and arr.shape[2] == 3:
        color_type, depth, channels = RGB, 8, 3
    else:
        raise FormatError(
            f"unsupported array for PNG output: dtype={arr.dtype}, shape={arr.shape}"
        )
    height, width = arr.shape[:2]
    if height == 0 or width == 0:
        raise FormatError("empty image")

    if depth == 16:
        payload = arr.astype(">u2").tobytes()
        row_bytes = width * 2
    else:
        payload = arr.tobytes()
        row_bytes = width * channels

    raw = bytearray()
    for y in range(height):
        raw.append(0)  # filter type 0
        raw += payload[y * row_bytes : (y + 1) * row_bytes]

    ihdr = struct.pack(">IIBBBBB", width, height, depth, color_type, 0, 0, 0)
    data = (
        _SIGNATURE
        + _chunk(b"IHDR", ihdr)
        + _chunk(b"IDAT", zlib.compress(bytes(raw), _ZLIB_LEVEL))
        + _chunk(b"IEND", b"")
    )
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _paeth(a, b, c):
    p = a + b - c
    pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
    if pa <= pb and pa <= pc:
        return a
    if pb <= pc:
        return b
    return c


def _unfilter(raw: bytes, height: int, row_bytes: int, bpp: int) -> bytes:
    expected = height * (1 + row_bytes)
    if len(raw) != expected:
        raise FormatError(
            f"decompressed size {len(raw)} does not match {expected} expected bytes"
        )
    out = bytearray(height * row_bytes)
    prior = bytearray(row_bytes)
    for y in range(height):
        offset = y * (1 + row_bytes)
        ftype = raw[offset]
        line = bytearray(raw[offset + 1 : offset + 1 + row_bytes])
        if ftype == 0:
            pass
        elif ftype == 1:  # Sub
            for i in range(bpp, row_bytes):
                line[i] = (line[i] + line[i - bpp]) & 0xFF
        elif ftype == 2:  # Up
            for i in range(row_bytes):
                line[i] = (line[i] + prior[i]) & 0xFF
        elif ftype == 3:  # Average
            for i in range(row_bytes):
                left = line[i - bpp] if i >= bpp else 0
                line[i] = (line[i] + ((left + prior[i]) >> 1)) & 0xFF
        elif ftype == 4:  # Paeth
            for i in range(row_bytes):
                left = line[i - bpp] if i >= bpp else 0
                upleft = prior[i - bpp] if i >= bpp else 0
                line[i] = (line[i] + _paeth(left, prior[i], upleft)) & 0xFF
        else:
            raise FormatError(f"unknown scanline filter {ftype}")
        out[y * row_bytes : (y + 1) * row_bytes] = line
        prior = line
    return bytes(out)


def read_png(path) -> PngImage:
    """Decode a PNG into pixel values (palette indices kept verbatim)."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    if not blob.startswith(_SIGNATURE):
        raise FormatError(f"{path}: not a PNG file")
    pos = len(_SIGNATURE)
    header = None
    idat = bytearray()
    while pos < len(blob):
        if pos + 8 > len(blob):
            raise FormatError(f"{path}: truncated chunk header")
        (length,) = struct.unpack(">I", blob[pos : pos + 4])
        tag = blob[pos + 4 : pos + 8]
        body = blob[pos + 8 : pos + 8 + length]
        if len(body) != length or pos + 12 + length > len(blob):
            raise FormatError(f"{path}: truncated chunk {tag!r}")
        (crc,) = struct.unpack(">I", blob[pos + 8 + length : pos + 12 + length])
        if zlib.crc32(tag + body) & 0xFFFFFFFF != crc:
            raise FormatError(f"{path}: CRC mismatch in chunk {tag!r}")
        pos += 12 + length
        if tag == b"IHDR":
            header = struct.unpack(">IIBBBBB", body)
        elif tag == b"IDAT":
            idat += body
        elif tag == b"IEND":
            break
        # PLTE and ancillary chunks are skipped; indices are the data.

    if header is None:
        raise FormatError(f"{path}: missing IHDR")
    width, height, depth, color_type, compression, filt, interlace = header
    if compression != 0 or filt != 0:
        raise FormatError(f"{path}: unsupported compression/filter method")
    if interlace != 0:
        raise FormatError(f"{path}: interlaced PNG not supported")
    if width == 0 or height == 0:
        raise FormatError(f"{path}: zero-sized image")

    if color_type == GRAY and depth in (8, 16):
        channels = 1
    elif color_type == INDEXED and depth == 8:
        channels = 1
    elif color_type == RGB and depth == 8:
        channels = 3
    else:
        raise FormatError(
            f"{path}: unsupported color type {color_type} at bit depth {depth}"
        )

    try:
        raw = zlib.decompress(bytes(idat))
    except zlib.error as exc:
        raise FormatError(f"{path}: corrupt image data: {exc}") from exc

    bytes_per_sample = depth // 8
    row_bytes = width * channels * bytes_per_sample
    data = _unfilter(raw, height, row_bytes, channels * bytes_per_sample)

    if depth == 16:
        pixels = np.frombuffer(data, dtype=">u2").astype(np.uint16)
    else:
        pixels = np.frombuffer(data, dtype=np.uint8).copy()
    if channels == 3:
        pixels = pixels.reshape(height, width, 3)
    else:
        pixels = pixels.reshape(height, width)
    return PngImage(pixels=pixels, color_type=color_type, bit_depth=depth)
