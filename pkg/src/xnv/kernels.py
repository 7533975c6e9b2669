"""Kernel functions, Gram matrices and PSD eigendecomposition."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, NumericalError

FAMILIES = ("gaussian", "linear", "polynomial")
_ALIASES = {"rbf": "gaussian", "poly": "polynomial"}


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and its parameters.

    The Gaussian kernel is ``exp(-||x - y||^2 / (2 bandwidth^2))`` and the
    polynomial kernel is ``(<x, y> + offset) ** degree``.
    """

    family: str = "gaussian"
    bandwidth: float = 1.0
    degree: int = 2
    offset: float = 1.0

    def __post_init__(self):
        family = _ALIASES.get(self.family, self.family)
        if family not in FAMILIES:
            raise ConfigError(f"unknown kernel family {self.family!r}")
        object.__setattr__(self, "family", family)
        if family == "gaussian" and not self.bandwidth > 0:
            raise ConfigError("gaussian bandwidth must be positive")
        if family == "polynomial":
            if int(self.degree) != self.degree or self.degree < 1:
                raise ConfigError("polynomial degree must be an integer >= 1")
            if self.offset < 0:
                raise ConfigError("polynomial offset must be nonnegative")
            object.__setattr__(self, "degree", int(self.degree))

    def to_dict(self):
        return {"family": self.family, "bandwidth": float(self.bandwidth),
                "degree": int(self.degree), "offset": float(self.offset)}


@dataclass(frozen=True)
class EigenDecomposition:
    """Retained eigenpairs of a PSD matrix, eigenvalues nonincreasing."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def rank(self):
        return int(self.eigenvalues.shape[0])

    def reconstruct(self):
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


def eval_kernel(spec, x, y):
    """Evaluate the kernel on a single pair of vectors."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise DataError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    if spec.family == "gaussian":
        d = x - y
        return float(np.exp(-np.dot(d, d) / (2.0 * spec.bandwidth ** 2)))
    dot = float(np.dot(x, y))
    if spec.family == "linear":
        return dot
    return float((dot + spec.offset) ** spec.degree)


def _as_matrix(X, name):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DataError(f"{name} must be a 2-D array")
    return X


def squared_distances(X, Y):
    """Pairwise squared Euclidean distances, clipped at zero."""
    xx = np.einsum("ij,ij->i", X, X)
    yy = np.einsum("ij,ij->i", Y, Y)
    d2 = xx[:, None] + yy[None, :] - 2.0 * (X @ Y.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def gram_matrix(spec, X, Y=None):
    """Kernel matrix with entry ``(i, j) = k(X[i], Y[j])``.

    When ``Y`` is omitted the result is exactly symmetric.
    """
    X = _as_matrix(X, "X")
    same = Y is None or Y is X
    Y = X if same else _as_matrix(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise DataError(
            f"dimension mismatch: X has {X.shape[1]} columns, Y has {Y.shape[1]}")
    if spec.family == "gaussian":
        d2 = squared_distances(X, Y)
        if same:
            np.fill_diagonal(d2, 0.0)
        K = np.exp(d2 * (-0.5 / spec.bandwidth ** 2))
    else:
        K = X @ Y.T
        if spec.family == "polynomial":
            K = (K + spec.offset) ** spec.degree
    if same:
        K = 0.5 * (K + K.T)
    return K


def eigendecompose_psd(K, rank_tol=1e-10):
    """Eigendecomposition of a symmetric PSD matrix with rank truncation.

    Eigenvalues are sorted nonincreasing, values below zero (round-off) are
    clamped to zero, and every eigenvalue at or below
    ``rank_tol * largest`` is dropped together with its eigenvector.

    Raises
    ------
    DataError
        If ``K`` is not square, not symmetric within 1e-10 (relative to its
        largest entry), or contains non-finite values.
    """
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise DataError("matrix must be square")
    if not np.all(np.isfinite(K)):
        raise DataError("matrix contains non-finite entries")
    if rank_tol < 0:
        raise ConfigError("rank_tol must be nonnegative")
    if K.size == 0:
        return EigenDecomposition(np.zeros(0), np.zeros((0, 0)))
    scale = max(1.0, float(np.max(np.abs(K))))
    if np.max(np.abs(K - K.T)) > 1e-10 * scale:
        raise DataError("matrix is not symmetric")
    vals, vecs = np.linalg.eigh(0.5 * (K + K.T))
    order = np.argsort(vals)[::-1]
    vals = np.maximum(vals[order], 0.0)
    vecs = vecs[:, order]
    top = vals[0]
    if top <= 0:
        keep = np.zeros(vals.shape, dtype=bool)
    else:
        keep = vals > rank_tol * top
    return EigenDecomposition(vals[keep], vecs[:, keep])


def inverse_sqrt_psd(C, floor=0.0):
    """Symmetric inverse square root of a positive definite matrix."""
    vals, vecs = np.linalg.eigh(C)
    if vals[0] <= floor:
        raise NumericalError("matrix is singular or not positive definite")
    return (vecs / np.sqrt(vals)) @ vecs.T


def median_bandwidth(X, max_rows=1000, seed=0):
    """Median pairwise distance heuristic for the Gaussian bandwidth."""
    X = _as_matrix(X, "X")
    if X.shape[0] > max_rows:
        rng = np.random.default_rng(seed)
        X = X[rng.choice(X.shape[0], max_rows, replace=False)]
    d2 = squared_distances(X, X)
    iu = np.triu_indices(X.shape[0], k=1)
    med = float(np.sqrt(np.median(d2[iu]))) if iu[0].size else 1.0
    return med if med > 0 else 1.0
