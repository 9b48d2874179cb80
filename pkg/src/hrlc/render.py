"""Deterministic color rendering of label maps.

One palette per run: the same global label gets the same color in every
frame, which is the visual form of the cross-frame consistency claim.
"""

import colorsys
import math
from dataclasses import dataclass

import numpy as np

from . import png_io
from .errors import RangeError

_GOLDEN = 0.6180339887
_BACKGROUND = (40, 40, 40)


@dataclass
class Palette:
    colors: np.ndarray  # (n, 3) uint8

    def __len__(self) -> int:
        return self.colors.shape[0]


def make_palette(n: int) -> Palette:
    """Golden-ratio hue stepping at s=0.70, v=0.95; index 0 is reserved."""
    if n < 1:
        raise RangeError(f"palette needs at least one color, got {n}")
    colors = np.empty((n, 3), dtype=np.uint8)
    colors[0] = _BACKGROUND
    for i in range(1, n):
        hue = (i * _GOLDEN) % 1.0
        rgb = colorsys.hsv_to_rgb(hue, 0.70, 0.95)
        colors[i] = [math.floor(c * 255.0 + 0.5) for c in rgb]
    return Palette(colors=colors)


def render_labels(label_map: np.ndarray, palette: Palette, path) -> None:
    """Write one label grid as an 8-bit RGB PNG, pixel color = palette[label]."""
    grid = np.asarray(label_map)
    if grid.size and int(grid.max()) >= len(palette):
        raise RangeError(
            f"label {int(grid.max())} outside palette of {len(palette)} colors"
        )
    png_io.write_png(path, palette.colors[grid])


def render_contact_sheet(label_maps, palette: Palette, path, separator: int = 2) -> None:
    """Tile frames horizontally with a black separator for side-by-side review."""
    grids = [np.asarray(m) for m in label_maps]
    height = grids[0].shape[0]
    tiles = []
    for i, grid in enumerate(grids):
        if grid.shape[0] != height:
            raise RangeError("contact sheet frames must share height")
        if int(grid.max()) >= len(palette):
            raise RangeError(
                f"label {int(grid.max())} outside palette of {len(palette)} colors"
            )
        if i:
            tiles.append(np.zeros((height, separator, 3), dtype=np.uint8))
        tiles.append(palette.colors[grid])
    png_io.write_png(path, np.concatenate(tiles, axis=1))
