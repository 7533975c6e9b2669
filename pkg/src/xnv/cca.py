"""Regularised canonical correlation analysis and the canonical norm."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, NumericalError

# Behaviour for correlations under ``lambda_floor``: keep the direction and
# cap its penalty at (1 - lambda) / lambda_floor.
LAMBDA_FLOOR_POLICY = "cap"


@dataclass(frozen=True)
class CcaModel:
    """Canonical bases for two views.

    ``basis1`` maps centred view-1 features (columns) to canonical
    coordinates, likewise ``basis2``. ``correlations`` are nonincreasing in
    ``[0, 1]``.
    """

    basis1: np.ndarray
    basis2: np.ndarray
    correlations: np.ndarray
    mean1: np.ndarray
    mean2: np.ndarray
    reg_eps: float

    @property
    def n_components(self):
        return self.correlations.shape[0]


def _whitener(C, reg_eps, which):
    vals, vecs = np.linalg.eigh(C)
    top = max(float(vals[-1]), 0.0)
    if reg_eps == 0 and (top == 0 or vals[0] <= 1e-12 * top):
        raise NumericalError(
            f"view {which} covariance is rank deficient; use reg_eps > 0")
    if vals[0] <= 0:
        raise NumericalError(f"view {which} covariance is not positive definite")
    return (vecs / np.sqrt(vals)) @ vecs.T


def fit_cca(Z1, Z2, reg_eps=1e-4):
    """Fit CCA between two views observed on the same rows.

    Each view is mean-centred, its covariance (1/n normalisation) receives
    ``reg_eps * I``, and the canonical pairs come from the SVD of the
    whitened cross-covariance.
    """
    Z1 = np.asarray(Z1, dtype=float)
    Z2 = np.asarray(Z2, dtype=float)
    if Z1.ndim == 1:
        Z1 = Z1[:, None]
    if Z2.ndim == 1:
        Z2 = Z2[:, None]
    if Z1.shape[0] != Z2.shape[0]:
        raise DataError(f"row counts differ: {Z1.shape[0]} vs {Z2.shape[0]}")
    if Z1.shape[0] < 2:
        raise DataError("CCA needs at least two rows")
    if reg_eps < 0:
        raise ConfigError("reg_eps must be nonnegative")
    n = Z1.shape[0]
    mean1, mean2 = Z1.mean(axis=0), Z2.mean(axis=0)
    X1, X2 = Z1 - mean1, Z2 - mean2
    C11 = X1.T @ X1 / n + reg_eps * np.eye(X1.shape[1])
    C22 = X2.T @ X2 / n + reg_eps * np.eye(X2.shape[1])
    C12 = X1.T @ X2 / n
    W1 = _whitener(C11, reg_eps, 1)
    W2 = _whitener(C22, reg_eps, 2)
    U, s, Vt = np.linalg.svd(W1 @ C12 @ W2, full_matrices=False)
    if s.size and s[0] > 1 + 1e-6:
        raise NumericalError(
            f"canonical correlation {s[0]:.6g} exceeds 1; increase reg_eps")
    k = min(X1.shape[1], X2.shape[1])
    return CcaModel(
        basis1=W1 @ U[:, :k],
        basis2=W2 @ Vt.T[:, :k],
        correlations=np.clip(s[:k], 0.0, 1.0),
        mean1=mean1,
        mean2=mean2,
        reg_eps=float(reg_eps),
    )


def project_view(model, Z, view=1):
    """Canonical coordinates of view-``view`` features."""
    if view not in (1, 2):
        raise ConfigError("view must be 1 or 2")
    basis, mean = ((model.basis1, model.mean1) if view == 1
                   else (model.basis2, model.mean2))
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[None, :]
    if Z.shape[1] != basis.shape[0]:
        raise DataError(
            f"dimension mismatch: got {Z.shape[1]} columns, "
            f"basis expects {basis.shape[0]}")
    return (Z - mean) @ basis


def canonical_penalties(correlations, lambda_floor=1e-6):
    """Per-direction weights ``(1 - lambda) / max(lambda, lambda_floor)``."""
    if not lambda_floor > 0:
        raise ConfigError("lambda_floor must be positive")
    lam = np.asarray(correlations, dtype=float)
    return (1.0 - lam) / np.maximum(lam, lambda_floor)


def canonical_norm_sq(correlations, w_bar, lambda_floor=1e-6):
    """Squared canonical norm of coefficients expressed in the canonical basis."""
    w_bar = np.asarray(w_bar, dtype=float)
    pen = canonical_penalties(correlations, lambda_floor)
    if pen.shape != w_bar.shape:
        raise DataError(
            f"length mismatch: {pen.shape[0]} correlations, {w_bar.shape[0]} weights")
    return float(np.sum(pen * w_bar ** 2))
