"""Two-level clustering pipeline over a feature sequence.

Flow: contiguous temporal batches -> one shared PCA over every pixel row ->
per-batch k-means in the reduced space -> per-cluster prototype means taken
in the ORIGINAL feature space -> second PCA + k-means over the prototype
matrix -> batch-local labels remapped to global ids.

Both PCA fits adapt to rank-deficient input (synthetic or near-duplicate
features) by retrying at the attained rank; all-constant input skips the
reduction entirely and clusters raw rows.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateError, InternalError, RangeError, StateError
from .kmeans import Clustering, kmeans_fit
from .pca import PcaModel, pca_fit, pca_transform
from .tensor_io import FeatureSequence, LabelMapSequence

_SEED_MASK = 0xFFFFFFFFFFFFFFFF
_INTER_SEED_SALT = 0x9E3779B97F4A7C15


@dataclass
class BatchPartition:
    """Contiguous, ordered, disjoint frame-index batches covering a sequence."""

    batches: list
    batch_size: int

    @property
    def n_batches(self) -> int:
        return len(self.batches)


@dataclass
class PrototypeSet:
    """One row per (batch, intra-cluster) pair, batch-major, cluster-minor.

    ``global_of`` stays None until the inter-batch step assigns global ids.
    """

    prototypes: np.ndarray
    origin: list
    global_of: np.ndarray | None = None


@dataclass
class PipelineConfig:
    batch_size: int = 4
    intra_k: int = 6
    inter_k: int = 6
    pca_dim_intra: int = 20
    pca_dim_inter: int = 20
    seed: int = 0
    kmeans_max_iters: int = 100
    kmeans_tol: float = 1e-4

    def validate(self):
        for name in ("batch_size", "intra_k", "inter_k", "pca_dim_intra",
                     "pca_dim_inter", "kmeans_max_iters"):
            if getattr(self, name) < 1:
                raise RangeError(f"{name} must be at least 1, got {getattr(self, name)}")
        if not self.kmeans_tol > 0:
            raise RangeError(f"kmeans_tol must be positive, got {self.kmeans_tol}")
        return self


def allocate_batches(n: int, batch_size: int) -> BatchPartition:
    """Split frame indices into contiguous chunks; the last may be shorter."""
    if n < 1:
        raise RangeError(f"need at least one frame, got {n}")
    if batch_size < 1:
        raise RangeError(f"batch_size must be at least 1, got {batch_size}")
    batches = [list(range(s, min(s + batch_size, n))) for s in range(0, n, batch_size)]
    return BatchPartition(batches=batches, batch_size=batch_size)


def _fit_pca_rank_adaptive(rows: np.ndarray, d: int) -> PcaModel | None:
    """Fit PCA at dimension ``d``, falling back to the attained rank.

    Returns None for rank-0 (all-constant) input, where no informative
    direction exists and callers should use the raw rows.
    """
    d = min(d, rows.shape[1], rows.shape[0] - 1)
    if d < 1:
        return None
    try:
        return pca_fit(rows, d)
    except DegenerateError as exc:
        if exc.attained_rank < 1:
            return None
        return pca_fit(rows, exc.attained_rank)


def intra_batch_cluster(seq: FeatureSequence, part: BatchPartition,
                        cfg: PipelineConfig, threads: int = 1):
    """Cluster each batch's pixels in a shared reduced space.

    One PCA is fitted over all n*H*W feature rows so batch clusterings are
    comparable; each batch then runs k-means with seed = cfg.seed XOR its
    batch index. Returns (per-batch Clustering list, shared PcaModel or None
    for rank-0 input).
    """
    n, height, width, dim = seq.frames.shape
    pixels_per_frame = height * width
    for b, batch in enumerate(part.batches):
        if len(batch) * pixels_per_frame < cfg.intra_k:
            raise RangeError(
                f"batch {b} has {len(batch) * pixels_per_frame} points, "
                f"fewer than intra_k={cfg.intra_k}"
            )

    all_rows = seq.frames.reshape(-1, dim)
    model = _fit_pca_rank_adaptive(all_rows, cfg.pca_dim_intra)
    reduced = pca_transform(model, all_rows) if model is not None else all_rows.astype(np.float64)

    def run_batch(b):
        batch = part.batches[b]
        start = batch[0] * pixels_per_frame
        stop = (batch[-1] + 1) * pixels_per_frame
        return kmeans_fit(
            reduced[start:stop],
            k=cfg.intra_k,
            seed=(cfg.seed ^ b) & _SEED_MASK,
            max_iters=cfg.kmeans_max_iters,
            tol=cfg.kmeans_tol,
        )

    indices = range(part.n_batches)
    if threads > 1 and part.n_batches > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            clusterings = list(pool.map(run_batch, indices))
    else:
        clusterings = [run_batch(b) for b in indices]
    return clusterings, model


def extract_prototypes(seq: FeatureSequence, part: BatchPartition,
                       intra: list) -> PrototypeSet:
    """Mean of the ORIGINAL (un-reduced) features of each intra cluster."""
    n, height, width, dim = seq.frames.shape
    pixels_per_frame = height * width
    rows_list = []
    origin = []
    for b, (batch, clustering) in enumerate(zip(part.batches, intra)):
        rows = seq.frames[batch].reshape(-1, dim).astype(np.float64)
        labels = clustering.labels
        k = clustering.k
        sums = np.zeros((k, dim), dtype=np.float64)
        np.add.at(sums, labels, rows)
        counts = np.bincount(labels, minlength=k)
        if (counts == 0).any():
            raise InternalError(f"batch {b} produced an empty cluster")
        rows_list.append(sums / counts[:, None])
        origin.extend((b, j) for j in range(k))
    return PrototypeSet(prototypes=np.vstack(rows_list), origin=origin, global_of=None)


def inter_batch_cluster(protos: PrototypeSet, cfg: PipelineConfig) -> PrototypeSet:
    """Cluster the prototype matrix with a fresh PCA; fill global ids."""
    P = protos.prototypes.shape[0]
    if P < cfg.inter_k:
        raise RangeError(f"{P} prototypes cannot support inter_k={cfg.inter_k}")
    if P == 1:
        return replace(protos, global_of=np.zeros(1, dtype=np.int32))

    model = _fit_pca_rank_adaptive(protos.prototypes, cfg.pca_dim_inter)
    reduced = (
        pca_transform(model, protos.prototypes)
        if model is not None
        else protos.prototypes
    )
    clustering = kmeans_fit(
        reduced,
        k=cfg.inter_k,
        seed=(cfg.seed ^ _INTER_SEED_SALT) & _SEED_MASK,
        max_iters=cfg.kmeans_max_iters,
        tol=cfg.kmeans_tol,
    )
    return replace(protos, global_of=clustering.labels.copy())


def relabel_global(part: BatchPartition, intra: list, protos: PrototypeSet,
                   grid_shape) -> LabelMapSequence:
    """Map each pixel's (batch, intra-label) to its global cluster id."""
    if protos.global_of is None:
        raise StateError("inter_batch_cluster has not filled global_of")
    height, width = grid_shape

    maps = []
    offset = 0
    for batch, clustering in zip(part.batches, intra):
        k = clustering.k
        lut = protos.global_of[offset : offset + k]
        offset += k
        grids = lut[clustering.labels].reshape(len(batch), height, width)
        maps.extend(np.asarray(grids[i], dtype=np.int32) for i in range(len(batch)))
    return LabelMapSequence(
        maps=np.stack(maps),
        num_labels=int(protos.global_of.max()) + 1,
    )


def run_pipeline(seq: FeatureSequence, cfg: PipelineConfig,
                 threads: int = 1) -> LabelMapSequence:
    """Full flow: allocate -> intra-cluster -> prototypes -> inter -> relabel."""
    cfg.validate()
    part = allocate_batches(seq.n_frames, cfg.batch_size)
    intra, _ = intra_batch_cluster(seq, part, cfg, threads=threads)
    protos = extract_prototypes(seq, part, intra)
    protos = inter_batch_cluster(protos, cfg)
    return relabel_global(part, intra, protos, seq.frames.shape[1:3])
