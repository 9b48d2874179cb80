"""Linear dimensionality reduction via covariance eigendecomposition.

Used at both hierarchy levels: once over every pixel feature row, and again
over the per-cluster prototype matrix. The feature dimension is small (256),
so the D x D covariance eigenproblem is cheap no matter how many rows the
fit sees.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DegenerateError, RangeError, ShapeError

_RANK_EPS = 1e-12


@dataclass
class PcaModel:
    """Mean vector plus an orthonormal projection basis mapping D -> d."""

    mean: np.ndarray
    basis: np.ndarray
    explained_variance: np.ndarray

    @property
    def input_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def output_dim(self) -> int:
        return self.basis.shape[1]


def _fix_signs(basis: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is non-negative.

    Ties on magnitude resolve to the lowest index (argmax behavior), making
    the decomposition reproducible across platforms.
    """
    anchor = np.argmax(np.abs(basis), axis=0)
    signs = np.sign(basis[anchor, np.arange(basis.shape[1])])
    signs[signs == 0] = 1.0
    return basis * signs


def pca_fit(samples: np.ndarray, d: int, max_rows: int | None = None,
            subsample_seed: int = 0) -> PcaModel:
    """Fit the top-d principal directions of ``samples`` (rows are points).

    The covariance uses the N-1 divisor; eigenvalues are returned in
    descending order as ``explained_variance``. When ``max_rows`` is set and
    the input is larger, a seeded uniform subsample (without replacement, in
    sorted row order) is used instead of the full matrix; the default is an
    exact fit.

    Raises RangeError when ``d`` is outside [1, min(N-1, D)], and
    DegenerateError (carrying the attained rank) when the input cannot
    support ``d`` informative directions.
    """
    X = np.asarray(samples, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"samples must be 2-D, got shape {X.shape}")
    n, dim = X.shape
    if n < 2:
        raise RangeError(f"need at least 2 samples to fit, got {n}")
    if not (1 <= d <= min(n - 1, dim)):
        raise RangeError(
            f"target dimension {d} outside [1, {min(n - 1, dim)}] for {n}x{dim} input"
        )
    if not np.isfinite(X).all():
        raise DataError("samples must be finite")

    if max_rows is not None and n > max_rows:
        rng = np.random.default_rng(subsample_seed)
        keep = np.sort(rng.choice(n, size=max_rows, replace=False))
        X = X[keep]
        n = max_rows

    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / (n - 1)

    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = eigenvalues[order]
    eigenvectors = eigenvectors[:, order]

    attained_rank = int(np.sum(eigenvalues > _RANK_EPS))
    if attained_rank < d:
        raise DegenerateError(
            f"input rank {attained_rank} cannot support {d} components",
            attained_rank=attained_rank,
        )

    basis = _fix_signs(eigenvectors[:, :d])
    return PcaModel(
        mean=mean,
        basis=basis,
        explained_variance=np.maximum(eigenvalues[:d], 0.0),
    )


def pca_transform(model: PcaModel, samples: np.ndarray) -> np.ndarray:
    """Project rows into the reduced space: basis^T (x - mean)."""
    X = np.asarray(samples, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise ShapeError(
            f"samples of shape {X.shape} do not match model dimension {model.input_dim}"
        )
    return (X - model.mean) @ model.basis


def pca_reconstruct(model: PcaModel, reduced: np.ndarray) -> np.ndarray:
    """Map reduced rows back to the original space: mean + basis y."""
    Y = np.asarray(reduced, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[1] != model.output_dim:
        raise ShapeError(
            f"reduced rows of shape {Y.shape} do not match model dimension {model.output_dim}"
        )
    return model.mean + Y @ model.basis.T
