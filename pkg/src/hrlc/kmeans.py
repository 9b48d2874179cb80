"""Lloyd's k-means with seeded k-means++ initialization.

Reproducibility contract: for fixed (points bytes, k, seed, max_iters, tol)
the result is bit-identical regardless of worker count. Assignment runs over
fixed-size point chunks; centroid updates combine per-chunk partial sums in
chunk order; all init randomness comes from the package PRNG (rng module)
with a documented consumption order. Distances accumulate in float64 even
for float32 inputs.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import RangeError, ShapeError
from .rng import Xoshiro256StarStar

_CHUNK = 16384


@dataclass
class Clustering:
    """Result of one k-means run; inertia is recomputable from the fields."""

    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


def _chunks(n):
    return [(s, min(s + _CHUNK, n)) for s in range(0, n, _CHUNK)]


def _sq_distances(points, center):
    diff = points - center
    return np.einsum("ij,ij->i", diff, diff)


def _assign_block(block, centroids):
    d2 = ((block[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)  # ties resolve to the lowest index
    return labels.astype(np.int32)


def _plusplus_init(points, k, rng):
    """k-means++ seeding. Consumes one uniform draw for the first centroid
    and one weighted draw per remaining centroid."""
    n = points.shape[0]
    chosen = [rng.next_below(n)]
    d2 = _sq_distances(points, points[chosen[0]])
    for _ in range(1, k):
        idx = rng.weighted_index(d2)
        chosen.append(idx)
        d2 = np.minimum(d2, _sq_distances(points, points[idx]))
    return points[chosen].copy()


def _repair_empty(points, labels, counts, centroids):
    """Move the point farthest from each empty cluster's centroid into it.

    Never steals the last member of a donor cluster, so no new empties
    appear. Ties on distance resolve to the lowest point index.
    """
    n = points.shape[0]
    for j in range(len(counts)):
        if counts[j] > 0:
            continue
        d2 = _sq_distances(points, centroids[j])
        order = np.lexsort((np.arange(n), -d2))
        for i in order:
            donor = labels[i]
            if counts[donor] >= 2:
                labels[i] = j
                counts[donor] -= 1
                counts[j] += 1
                break


def kmeans_fit(points: np.ndarray, k: int, seed: int = 0, max_iters: int = 100,
               tol: float = 1e-4, threads: int = 1) -> Clustering:
    """Cluster ``points`` (N x d) into k groups.

    Iterations alternate nearest-centroid assignment (ties to the lowest
    centroid index) with mean updates, stopping when the assignment is
    stable, the relative inertia improvement drops below ``tol``, or
    ``max_iters`` is reached. The returned clustering never has an empty
    cluster.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"points must be 2-D, got shape {X.shape}")
    n, dim = X.shape
    if k < 1:
        raise RangeError(f"k must be at least 1, got {k}")
    if n < k:
        raise RangeError(f"cannot form {k} clusters from {n} points")
    if max_iters < 1:
        raise RangeError(f"max_iters must be at least 1, got {max_iters}")

    rng = Xoshiro256StarStar(seed)
    centroids = _plusplus_init(X, k, rng)

    spans = _chunks(n)
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 and len(spans) > 1 else None
    try:
        labels = np.empty(n, dtype=np.int32)
        prev_labels = None
        inertia = None
        history = []
        converged = False
        iterations = 0

        for _ in range(max_iters):
            iterations += 1

            if pool is not None:
                blocks = list(pool.map(lambda s: _assign_block(X[s[0]:s[1]], centroids), spans))
            else:
                blocks = [_assign_block(X[s0:s1], centroids) for s0, s1 in spans]
            for (s0, s1), block in zip(spans, blocks):
                labels[s0:s1] = block

            counts = np.bincount(labels, minlength=k)
            if (counts == 0).any():
                _repair_empty(X, labels, counts, centroids)

            # Per-chunk partial sums, combined in chunk order.
            sums = np.zeros((k, dim), dtype=np.float64)
            for s0, s1 in spans:
                part = np.zeros((k, dim), dtype=np.float64)
                np.add.at(part, labels[s0:s1], X[s0:s1])
                sums += part
            centroids = sums / counts[:, None]

            new_inertia = 0.0
            for s0, s1 in spans:
                diff = X[s0:s1] - centroids[labels[s0:s1]]
                new_inertia += float(np.einsum("ij,ij->", diff, diff))

            if inertia is not None:
                assert new_inertia <= inertia * (1.0 + 1e-12) + 1e-12, (
                    f"inertia increased: {inertia} -> {new_inertia}"
                )
            history.append(new_inertia)

            stable = prev_labels is not None and np.array_equal(labels, prev_labels)
            prev_labels = labels.copy()
            improved = None if inertia is None else inertia - new_inertia
            prev_inertia, inertia = inertia, new_inertia

            if stable:
                converged = True
                break
            if improved is not None:
                if prev_inertia <= 0.0 or improved / prev_inertia < tol:
                    converged = True
                    break
    finally:
        if pool is not None:
            pool.shutdown()

    return Clustering(
        labels=labels,
        centroids=centroids,
        inertia=inertia,
        iterations=iterations,
        converged=converged,
        history=history,
    )


def kmeans_assign(centroids: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Nearest-centroid labels for out-of-sample points (ties to lowest index)."""
    C = np.asarray(centroids, dtype=np.float64)
    X = np.asarray(points, dtype=np.float64)
    if C.ndim != 2 or X.ndim != 2 or C.shape[1] != X.shape[1]:
        raise ShapeError(
            f"dimension mismatch: centroids {C.shape} vs points {X.shape}"
        )
    labels = np.empty(X.shape[0], dtype=np.int32)
    for s0, s1 in _chunks(X.shape[0]):
        labels[s0:s1] = _assign_block(X[s0:s1], C)
    return labels
