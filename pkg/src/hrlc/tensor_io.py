"""Feature-tensor, mask, and label-map file handling.

Feature grids live in a narrow NPY-style container: magic ``\\x93NUMPY``,
version 1.0, a 2-byte little-endian header length, an ASCII header dict
``{'descr': '<f4', 'fortran_order': False, 'shape': (H, W, D), }`` padded
with spaces so magic+header is a multiple of 64 bytes and terminated by a
newline, then the raw C-order float32 payload. Anything else is rejected, so
the clustering core never sees a tensor it did not validate.
"""

import ast
import fnmatch
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import png_io
from .errors import DataError, FormatError, IoError, NotFoundError, RangeError, ShapeError

_MAGIC = b"\x93NUMPY"
_VERSION = b"\x01\x00"
_HEADER_ALIGN = 64


@dataclass
class FeatureSequence:
    """Ordered per-frame feature grids, stacked as one (n, H, W, D) array."""

    frames: np.ndarray
    frame_ids: list = field(default_factory=list)

    def __post_init__(self):
        frames = np.asarray(self.frames)
        if frames.ndim != 4:
            raise ShapeError(f"expected (n, H, W, D) frames, got shape {frames.shape}")
        if frames.shape[0] < 1:
            raise ShapeError("a sequence needs at least one frame")
        if len(self.frame_ids) != frames.shape[0]:
            raise ShapeError("frame_ids must match the number of frames")
        if len(set(self.frame_ids)) != len(self.frame_ids):
            raise ShapeError("frame_ids must be unique")
        if not np.isfinite(frames).all():
            raise DataError("feature values must be finite")
        self.frames = frames

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def grid_shape(self):
        return self.frames.shape[1:]


@dataclass
class LabelMapSequence:
    """Per-frame integer label grids sharing one global label space."""

    maps: np.ndarray
    num_labels: int

    def __post_init__(self):
        maps = np.asarray(self.maps, dtype=np.int32)
        if maps.ndim != 3:
            raise ShapeError(f"expected (n, H, W) maps, got shape {maps.shape}")
        if maps.min(initial=0) < 0:
            raise RangeError("labels must be non-negative")
        if maps.size and int(maps.max()) >= self.num_labels:
            raise RangeError(
                f"label {int(maps.max())} outside [0, {self.num_labels})"
            )
        self.maps = maps


def _parse_header(header: bytes, path) -> tuple:
    try:
        text = header.decode("ascii")
        fields = ast.literal_eval(text.strip())
        if not isinstance(fields, dict):
            raise ValueError("header is not a dict")
    except (ValueError, SyntaxError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: malformed header: {exc}") from exc
    if set(fields) != {"descr", "fortran_order", "shape"}:
        raise FormatError(f"{path}: unexpected header keys {sorted(fields)}")
    if fields["fortran_order"] is not False:
        raise FormatError(f"{path}: fortran-order payloads are not supported")
    if fields["descr"] != "<f4":
        raise ShapeError(
            f"{path}: dtype {fields['descr']!r} is not little-endian float32"
        )
    shape = fields["shape"]
    if not (isinstance(shape, tuple) and all(isinstance(s, int) and s > 0 for s in shape)):
        raise FormatError(f"{path}: invalid shape {shape!r}")
    return shape


def read_feature_tensor(path) -> np.ndarray:
    """Read one (H, W, D) float32 feature grid, bit-exact."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    if blob[: len(_MAGIC)] != _MAGIC:
        raise FormatError(f"{path}: bad magic, not a feature tensor")
    if blob[6:8] != _VERSION:
        raise FormatError(f"{path}: unsupported container version {blob[6:8]!r}")
    if len(blob) < 10:
        raise FormatError(f"{path}: truncated header")
    (header_len,) = struct.unpack("<H", blob[8:10])
    header = blob[10 : 10 + header_len]
    if len(header) != header_len or not header.endswith(b"\n"):
        raise FormatError(f"{path}: truncated or unterminated header")
    shape = _parse_header(header, path)

    if len(shape) == 4 and shape[0] == 1:
        shape = shape[1:]
    if len(shape) != 3:
        raise ShapeError(f"{path}: expected rank 3 (H, W, D), got shape {shape}")

    payload = blob[10 + header_len :]
    expected = int(np.prod(shape)) * 4
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    grid = np.frombuffer(payload, dtype="<f4").reshape(shape)
    if not np.isfinite(grid).all():
        raise DataError(f"{path}: non-finite feature values")
    return grid


def write_feature_tensor(grid: np.ndarray, path) -> None:
    """Write an (H, W, D) grid as little-endian float32, round-trip exact."""
    arr = np.ascontiguousarray(grid, dtype="<f4")
    if arr.ndim != 3:
        raise ShapeError(f"expected rank 3 (H, W, D), got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise DataError("feature values must be finite")

    shape_repr = "(" + ", ".join(str(s) for s in arr.shape) + ")"
    header = f"{{'descr': '<f4', 'fortran_order': False, 'shape': {shape_repr}, }}"
    # magic(6) + version(2) + length(2) + header + '\n' padded to 64 bytes
    unpadded = len(_MAGIC) + 2 + 2 + len(header) + 1
    pad = (-unpadded) % _HEADER_ALIGN
    header_bytes = header.encode("ascii") + b" " * pad + b"\n"
    try:
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(_VERSION)
            fh.write(struct.pack("<H", len(header_bytes)))
            fh.write(header_bytes)
            fh.write(arr.tobytes())
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_sequence(directory, pattern: str = "*.npy") -> FeatureSequence:
    """Load every matching file, ordered lexicographically by filename."""
    directory = Path(directory)
    if not directory.is_dir():
        raise NotFoundError(f"feature directory not found: {directory}")
    names = sorted(n for n in os.listdir(directory) if fnmatch.fnmatch(n, pattern))
    if not names:
        raise NotFoundError(f"no files matching {pattern!r} in {directory}")

    grids = []
    for name in names:
        grid = read_feature_tensor(directory / name)
        if grids and grid.shape != grids[0].shape:
            raise ShapeError(
                f"{name}: shape {grid.shape} differs from {grids[0].shape}"
            )
        grids.append(grid)
    return FeatureSequence(frames=np.stack(grids), frame_ids=names)


def read_mask(path) -> np.ndarray:
    """Read a ground-truth mask; pixel values are object ids, 0 = background."""
    image = png_io.read_png(path)
    if image.color_type not in (png_io.GRAY, png_io.INDEXED) or image.bit_depth != 8:
        raise FormatError(
            f"{path}: masks must be 8-bit single-channel PNG "
            f"(got color type {image.color_type}, depth {image.bit_depth})"
        )
    return image.pixels.astype(np.uint8)


def write_label_maps(seq: LabelMapSequence, directory) -> None:
    """Write one 16-bit grayscale PNG per frame, named by zero-padded index."""
    if seq.num_labels > 65536:
        raise RangeError(f"{seq.num_labels} labels exceed 16-bit PNG range")
    if seq.maps.size and int(seq.maps.max()) >= 65536:
        raise RangeError("label values exceed 16-bit PNG range")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for index in range(seq.maps.shape[0]):
        png_io.write_png(directory / f"{index:05d}.png", seq.maps[index].astype(np.uint16))


def read_label_maps(directory, pattern: str = "*.png") -> LabelMapSequence:
    """Read label maps written by :func:`write_label_maps` (8- or 16-bit gray)."""
    directory = Path(directory)
    if not directory.is_dir():
        raise NotFoundError(f"label-map directory not found: {directory}")
    names = sorted(n for n in os.listdir(directory) if fnmatch.fnmatch(n, pattern))
    if not names:
        raise NotFoundError(f"no files matching {pattern!r} in {directory}")

    maps = []
    for name in names:
        image = png_io.read_png(directory / name)
        if image.color_type != png_io.GRAY:
            raise FormatError(f"{name}: label maps must be single-channel grayscale")
        if maps and image.pixels.shape != maps[0].shape:
            raise ShapeError(
                f"{name}: shape {image.pixels.shape} differs from {maps[0].shape}"
            )
        maps.append(image.pixels.astype(np.int32))
    stacked = np.stack(maps)
    return LabelMapSequence(maps=stacked, num_labels=int(stacked.max()) + 1)
