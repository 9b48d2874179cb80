"""PNG codec round trips, cross-validation against Pillow, and error paths."""

import numpy as np
import pytest
from PIL import Image

from hrlc import png_io
from hrlc.errors import FormatError


def test_gray8_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    arr = rng.integers(0, 256, size=(13, 9), dtype=np.uint8)
    path = tmp_path / "g8.png"
    png_io.write_png(path, arr)
    image = png_io.read_png(path)
    assert image.color_type == png_io.GRAY and image.bit_depth == 8
    assert np.array_equal(image.pixels, arr)


def test_gray16_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    arr = rng.integers(0, 65536, size=(7, 21), dtype=np.uint16)
    path = tmp_path / "g16.png"
    png_io.write_png(path, arr)
    image = png_io.read_png(path)
    assert image.bit_depth == 16
    assert np.array_equal(image.pixels, arr)


def test_rgb8_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    arr = rng.integers(0, 256, size=(5, 6, 3), dtype=np.uint8)
    path = tmp_path / "rgb.png"
    png_io.write_png(path, arr)
    image = png_io.read_png(path)
    assert image.color_type == png_io.RGB
    assert np.array_equal(image.pixels, arr)


def test_written_files_are_byte_deterministic(tmp_path):
    arr = np.arange(64, dtype=np.uint8).reshape(8, 8)
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    png_io.write_png(a, arr)
    png_io.write_png(b, arr)
    assert a.read_bytes() == b.read_bytes()


def test_pillow_reads_our_output(tmp_path):
    rng = np.random.default_rng(3)
    gray = rng.integers(0, 256, size=(11, 4), dtype=np.uint8)
    path = tmp_path / "ours.png"
    png_io.write_png(path, gray)
    assert np.array_equal(np.asarray(Image.open(path)), gray)

    deep = rng.integers(0, 65536, size=(6, 5), dtype=np.uint16)
    path16 = tmp_path / "ours16.png"
    png_io.write_png(path16, deep)
    assert np.array_equal(np.asarray(Image.open(path16), dtype=np.uint16), deep)


def test_we_read_pillow_gray_output(tmp_path):
    # Pillow picks its own scanline filters, exercising the unfilter paths.
    rng = np.random.default_rng(4)
    arr = rng.integers(0, 256, size=(40, 50), dtype=np.uint8)
    path = tmp_path / "pil.png"
    Image.fromarray(arr, mode="L").save(path)
    image = png_io.read_png(path)
    assert np.array_equal(image.pixels, arr)


def test_we_read_pillow_palette_output_verbatim(tmp_path):
    rng = np.random.default_rng(5)
    arr = rng.integers(0, 16, size=(24, 31), dtype=np.uint8)
    img = Image.fromarray(arr, mode="P")
    img.putpalette([v for i in range(256) for v in (i, 255 - i, i // 2)])
    path = tmp_path / "palette.png"
    img.save(path)
    image = png_io.read_png(path)
    assert image.color_type == png_io.INDEXED
    assert np.array_equal(image.pixels, arr)


def test_we_read_pillow_rgb_output(tmp_path):
    rng = np.random.default_rng(6)
    arr = rng.integers(0, 256, size=(33, 18, 3), dtype=np.uint8)
    path = tmp_path / "rgb_pil.png"
    Image.fromarray(arr, mode="RGB").save(path)
    image = png_io.read_png(path)
    assert np.array_equal(image.pixels, arr)


def test_all_five_filters_decode():
    # Hand-build one image per filter type and unfilter it; the expected
    # reconstructions were computed by hand from the filter definitions.
    # Rows of 3 pixels, bpp=1. Raw scanline bytes after the filter byte:
    cases = {
        0: (bytes([0, 10, 20, 30]), [10, 20, 30]),
        1: (bytes([1, 10, 10, 10]), [10, 20, 30]),  # Sub: cumulative
        3: (bytes([3, 10, 15, 20]), [10, 20, 30]),  # Average with zero prior: +floor(left/2)
    }
    for ftype, (raw, expected) in cases.items():
        out = png_io._unfilter(raw, height=1, row_bytes=3, bpp=1)
        assert list(out) == expected, f"filter {ftype}"

    # Up and Paeth need a prior row: first row stored with filter 0.
    raw = bytes([0, 10, 20, 30]) + bytes([2, 1, 2, 3])  # Up adds prior
    out = png_io._unfilter(raw, height=2, row_bytes=3, bpp=1)
    assert list(out[3:]) == [11, 22, 33]

    # Paeth predictor of (left, up, upleft); first pixel predicts from up.
    raw = bytes([0, 10, 20, 30]) + bytes([4, 5, 5, 5])
    out = png_io._unfilter(raw, height=2, row_bytes=3, bpp=1)
    # pixel 0: pred=up=10 -> 15; pixel 1: left=15,up=20,upleft=10 -> paeth=25? no:
    # p=15+20-10=25; |25-15|=10,|25-20|=5,|25-10|=15 -> up=20 -> 25
    # pixel 2: left=25,up=30,upleft=20 -> p=35; pa=10,pb=5,pc=15 -> up=30 -> 35
    assert list(out[3:]) == [15, 25, 35]


def test_rejects_garbage_and_truncation(tmp_path):
    path = tmp_path / "bad.png"
    path.write_bytes(b"not a png at all")
    with pytest.raises(FormatError):
        png_io.read_png(path)

    good = tmp_path / "good.png"
    png_io.write_png(good, np.zeros((4, 4), dtype=np.uint8))
    blob = good.read_bytes()
    truncated = tmp_path / "trunc.png"
    truncated.write_bytes(blob[:-8])
    with pytest.raises(FormatError):
        png_io.read_png(truncated)


def test_rejects_corrupt_crc(tmp_path):
    good = tmp_path / "good.png"
    png_io.write_png(good, np.zeros((4, 4), dtype=np.uint8))
    blob = bytearray(good.read_bytes())
    blob[20] ^= 0xFF  # inside IHDR payload, CRC now wrong
    bad = tmp_path / "crc.png"
    bad.write_bytes(bytes(blob))
    with pytest.raises(FormatError):
        png_io.read_png(bad)


def test_rejects_interlaced(tmp_path):
    # Patch the IHDR interlace byte (and its CRC) of a valid file.
    import struct
    import zlib

    good = tmp_path / "plain.png"
    png_io.write_png(good, np.zeros((8, 8), dtype=np.uint8))
    blob = bytearray(good.read_bytes())
    ihdr_start = 8 + 8  # signature + length/type
    ihdr = bytearray(blob[ihdr_start : ihdr_start + 13])
    ihdr[12] = 1  # Adam7
    crc = zlib.crc32(b"IHDR" + bytes(ihdr)) & 0xFFFFFFFF
    blob[ihdr_start : ihdr_start + 13] = ihdr
    blob[ihdr_start + 13 : ihdr_start + 17] = struct.pack(">I", crc)
    bad = tmp_path / "interlaced.png"
    bad.write_bytes(bytes(blob))
    with pytest.raises(FormatError):
        png_io.read_png(bad)


def test_rejects_unsupported_write_dtype(tmp_path):
    with pytest.raises(FormatError):
        png_io.write_png(tmp_path / "x.png", np.zeros((4, 4), dtype=np.int32))
