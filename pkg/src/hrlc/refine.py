"""Coarse-to-fine upgrade of label grids to source-image resolution.

Nearest-neighbor upsampling with pixel-center alignment followed by a
majority (modal) filter. Both steps preserve the label set: no value can
appear in the output that was absent from the input.
"""

from dataclasses import dataclass

import numpy as np

from .errors import RangeError
from .tensor_io import LabelMapSequence


@dataclass
class RefineConfig:
    target_h: int
    target_w: int
    smooth_radius: int = 2
    smooth_passes: int = 1


def upsample_labels(label_map: np.ndarray, cfg: RefineConfig) -> np.ndarray:
    """Nearest-neighbor upsample: fine (y, x) reads the coarse cell whose
    center is nearest, i.e. coarse index floor((y + 0.5) * H / H')."""
    grid = np.asarray(label_map)
    src_h, src_w = grid.shape
    if cfg.target_h < src_h or cfg.target_w < src_w:
        raise RangeError(
            f"target {cfg.target_h}x{cfg.target_w} smaller than source {src_h}x{src_w}"
        )
    rows = np.minimum(
        ((np.arange(cfg.target_h) + 0.5) * src_h / cfg.target_h).astype(np.int64),
        src_h - 1,
    )
    cols = np.minimum(
        ((np.arange(cfg.target_w) + 0.5) * src_w / cfg.target_w).astype(np.int64),
        src_w - 1,
    )
    return grid[np.ix_(rows, cols)]


def _box_counts(indicator: np.ndarray, radius: int) -> np.ndarray:
    """Per-pixel sums over (2r+1)^2 windows clipped at the borders."""
    h, w = indicator.shape
    integral = np.zeros((h + 1, w + 1), dtype=np.int64)
    integral[1:, 1:] = indicator.cumsum(axis=0).cumsum(axis=1)
    y0 = np.clip(np.arange(h) - radius, 0, h)
    y1 = np.clip(np.arange(h) + radius + 1, 0, h)
    x0 = np.clip(np.arange(w) - radius, 0, w)
    x1 = np.clip(np.arange(w) + radius + 1, 0, w)
    return (
        integral[np.ix_(y1, x1)]
        - integral[np.ix_(y0, x1)]
        - integral[np.ix_(y1, x0)]
        + integral[np.ix_(y0, x0)]
    )


def majority_smooth(label_map: np.ndarray, radius: int, passes: int = 1) -> np.ndarray:
    """Replace each pixel by the modal label of its clipped window.

    Ties resolve to the smallest label id; passes apply sequentially.
    """
    if radius < 0:
        raise RangeError(f"radius must be non-negative, got {radius}")
    grid = np.asarray(label_map).copy()
    if radius == 0 or passes < 1:
        return grid
    for _ in range(passes):
        best_count = None
        best_label = None
        for label in np.unique(grid):  # ascending, so ties keep the smallest
            counts = _box_counts((grid == label).astype(np.int64), radius)
            if best_count is None:
                best_count = counts
                best_label = np.full_like(grid, label)
            else:
                better = counts > best_count
                best_count = np.where(better, counts, best_count)
                best_label = np.where(better, label, best_label)
        grid = best_label
    return grid


def refine_map(label_map: np.ndarray, cfg: RefineConfig) -> np.ndarray:
    """Upsample then smooth one grid."""
    return majority_smooth(upsample_labels(label_map, cfg), cfg.smooth_radius, cfg.smooth_passes)


def refine_sequence(seq: LabelMapSequence, cfg: RefineConfig) -> LabelMapSequence:
    refined = np.stack([refine_map(seq.maps[i], cfg) for i in range(seq.maps.shape[0])])
    return LabelMapSequence(maps=refined, num_labels=seq.num_labels)
