"""Synthetic feature sequences with known ground truth.

Each pixel's feature is a fixed generator vector plus seeded gaussian noise,
so the correct partition is known by construction. Layouts:

* ``stripes`` - static vertical stripes, one generator each.
* ``drift``   - the stripe pattern shifts one pixel per frame, so batches
  see slightly different spatial arrangements of the same generators.
* ``swap``    - the generator occupying each stripe is cyclically permuted
  every ``layout_period`` frames; spatial positions and generator identity
  disagree across batches, the adversarial case for positional metrics.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import RangeError, ShapeError
from .tensor_io import FeatureSequence, LabelMapSequence

LAYOUTS = ("stripes", "drift", "swap")


@dataclass
class SynthSpec:
    n_frames: int
    height: int
    width: int
    generators: np.ndarray  # (G, D)
    layout: str = "stripes"
    noise_sigma: float = 0.0
    seed: int = 0
    layout_period: int = 4  # frames per batch for the swap layout

    def __post_init__(self):
        self.generators = np.asarray(self.generators, dtype=np.float64)
        if self.generators.ndim != 2 or self.generators.shape[0] < 1:
            raise ShapeError("generators must be a (G, D) matrix with G >= 1")
        if self.layout not in LAYOUTS:
            raise RangeError(f"unknown layout {self.layout!r}, expected one of {LAYOUTS}")
        if min(self.n_frames, self.height, self.width) < 1:
            raise RangeError("n_frames, height, width must all be positive")
        g = self.generators.shape[0]
        if g > 1 and min_generator_distance(self.generators) <= 0:
            raise RangeError("generators must be pairwise distinct")


def default_generators(g: int, d: int, seed: int = 0, scale: float = 1.0) -> np.ndarray:
    """Random generator matrix with comfortably nonzero pairwise distances."""
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, scale, size=(g, d))


def min_generator_distance(generators: np.ndarray) -> float:
    g = generators.shape[0]
    if g < 2:
        return 0.0
    diffs = generators[:, None, :] - generators[None, :, :]
    dist = np.sqrt((diffs**2).sum(axis=2))
    return float(dist[np.triu_indices(g, k=1)].min())


def layout_grids(spec: SynthSpec) -> np.ndarray:
    """(n, H, W) generator-id grids for the chosen layout."""
    g = spec.generators.shape[0]
    x = np.arange(spec.width)
    base = np.minimum(x * g // spec.width, g - 1).astype(np.int32)

    grids = np.empty((spec.n_frames, spec.height, spec.width), dtype=np.int32)
    for f in range(spec.n_frames):
        if spec.layout == "stripes":
            row = base
        elif spec.layout == "drift":
            row = base[(x + f) % spec.width]
        else:  # swap
            row = (base + f // spec.layout_period) % g
        grids[f] = np.broadcast_to(row, (spec.height, spec.width))
    return grids


def generate(spec: SynthSpec):
    """(FeatureSequence, ground-truth LabelMapSequence) for the spec."""
    grids = layout_grids(spec)
    features = spec.generators[grids]  # (n, H, W, D) float64
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        features = features + rng.normal(0.0, spec.noise_sigma, size=features.shape)
    seq = FeatureSequence(
        frames=features.astype(np.float32),
        frame_ids=[f"synth_{i:05d}" for i in range(spec.n_frames)],
    )
    truth = LabelMapSequence(maps=grids, num_labels=spec.generators.shape[0])
    return seq, truth


def adjusted_rand_index(a, b) -> float:
    """Chance-corrected partition agreement over pooled elements."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ShapeError(f"shapes differ: {a.shape} vs {b.shape}")
    a = a.ravel()
    b = b.ravel()
    n = a.size

    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    rows = int(ia.max()) + 1
    cols = int(ib.max()) + 1
    counts = np.bincount(ia * cols + ib, minlength=rows * cols).reshape(rows, cols)

    def comb2(x):
        x = x.astype(np.float64)
        return x * (x - 1.0) / 2.0

    sum_cells = comb2(counts).sum()
    sum_rows = comb2(counts.sum(axis=1)).sum()
    sum_cols = comb2(counts.sum(axis=0)).sum()
    total = n * (n - 1.0) / 2.0

    expected = sum_rows * sum_cols / total
    maximum = 0.5 * (sum_rows + sum_cols)
    if maximum == expected:
        return 1.0  # both partitions trivial; identical by construction
    return float((sum_cells - expected) / (maximum - expected))
