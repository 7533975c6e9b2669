"""Random views: Nystrom feature maps and random kitchen sinks."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, NumericalError
from .kernels import KernelSpec, eigendecompose_psd, gram_matrix


@dataclass(frozen=True)
class NystromMap:
    """Landmarks plus the ``D^{-1/2} V^T`` projection of their Gram matrix.

    ``projection`` has shape ``(rank, n_landmarks)``; rows are ordered by
    decreasing landmark-Gram eigenvalue.
    """

    landmarks: np.ndarray
    projection: np.ndarray
    kernel: KernelSpec
    eigenvalues: np.ndarray

    @property
    def dim(self):
        return self.projection.shape[0]

    def transform(self, X):
        return featurize(self, X)


@dataclass(frozen=True)
class RksMap:
    """Random Fourier features ``scale * cos(X W^T + b)`` for a Gaussian kernel."""

    frequencies: np.ndarray
    phases: np.ndarray
    scale: float

    @property
    def dim(self):
        return self.frequencies.shape[0]

    def transform(self, X):
        return featurize_rks(self, X)


def _n_rows(data):
    if isinstance(data, (int, np.integer)):
        return int(data)
    features = getattr(data, "features", data)
    return np.asarray(features).shape[0]


def sample_landmarks(data, m_total, seed):
    """Draw ``m_total`` distinct rows uniformly and split them into two views.

    ``data`` may be a row count, an array, or anything with ``features``.
    Returns ``(first_half, second_half)`` index arrays of equal length.
    """
    n = _n_rows(data)
    if m_total < 2 or m_total % 2:
        raise ConfigError("m_total must be a positive even count (2M)")
    if n < m_total:
        raise DataError(f"need at least {m_total} rows for landmarks, have {n}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(n, size=m_total, replace=False)
    half = m_total // 2
    return idx[:half], idx[half:]


def fit_nystrom_map(data, indices, kernel, rank_tol=1e-10):
    """Fit a Nystrom map on the landmark rows ``data[indices]``."""
    X = np.asarray(getattr(data, "features", data), dtype=float)
    indices = np.asarray(indices, dtype=int)
    if indices.size == 0:
        raise ConfigError("at least one landmark is required")
    if indices.min() < 0 or indices.max() >= X.shape[0]:
        raise DataError("landmark index out of range")
    L = X[indices]
    eig = eigendecompose_psd(gram_matrix(kernel, L), rank_tol)
    if eig.rank == 0:
        raise NumericalError("landmark kernel matrix has rank 0")
    projection = eig.eigenvectors.T / np.sqrt(eig.eigenvalues)[:, None]
    return NystromMap(L.copy(), projection, kernel, eig.eigenvalues)


def featurize(nmap, X):
    """Nystrom features, one row ``z(x) = P [k(x, l_1) ... k(x, l_M)]^T`` per input."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != nmap.landmarks.shape[1]:
        raise DataError(
            f"dimension mismatch: input has {X.shape[1]} columns, "
            f"landmarks have {nmap.landmarks.shape[1]}")
    return gram_matrix(nmap.kernel, X, nmap.landmarks) @ nmap.projection.T


def fit_rks_map(dim_out, kernel, seed, dim_in):
    """Sample random Fourier features approximating a Gaussian kernel."""
    if kernel.family != "gaussian":
        raise ConfigError("random kitchen sinks need a gaussian kernel")
    if dim_out < 1 or dim_in < 1:
        raise ConfigError("dimensions must be positive")
    rng = np.random.default_rng(seed)
    W = rng.normal(scale=1.0 / kernel.bandwidth, size=(dim_out, dim_in))
    b = rng.uniform(0.0, 2.0 * np.pi, size=dim_out)
    return RksMap(W, b, float(np.sqrt(2.0 / dim_out)))


def featurize_rks(rmap, X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != rmap.frequencies.shape[1]:
        raise DataError("dimension mismatch between input and frequencies")
    return rmap.scale * np.cos(X @ rmap.frequencies.T + rmap.phases)
