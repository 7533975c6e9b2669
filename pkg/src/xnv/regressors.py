"""Supervised solvers for XNV and its baselines (KRR, SSSL_M, CoRLS)."""

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import scipy.linalg

from .cca import canonical_penalties
from .errors import ConfigError, DataError, NumericalError
from .kernels import gram_matrix
from .nystrom import featurize, fit_nystrom_map, sample_landmarks


@dataclass
class LinearModel:
    """Weights in a feature space plus an intercept.

    ``pipeline`` optionally carries whatever maps raw inputs to the feature
    space the weights live in (see ``SsslPipeline``).
    """

    weights: np.ndarray
    intercept: float = 0.0
    train_mse: float = float("nan")
    pipeline: Optional[Any] = None
    info: dict = field(default_factory=dict)

    def predict_raw(self, X):
        if self.pipeline is None:
            raise ConfigError("model has no featurisation pipeline")
        return predict(self, self.pipeline.transform(X))


@dataclass
class DualModel:
    """Kernel ridge regression in dual form."""

    dual_weights: np.ndarray
    intercept: float = 0.0
    train_rows: Optional[np.ndarray] = None
    kernel: Any = None

    def predict(self, X):
        if self.train_rows is None or self.kernel is None:
            raise ConfigError("dual model was fitted without training rows")
        return gram_matrix(self.kernel, X, self.train_rows) @ self.dual_weights + self.intercept


@dataclass
class CorlsModel:
    """Two view-specific weight vectors; predictions average the views."""

    w1: np.ndarray
    w2: np.ndarray
    intercept: float = 0.0
    jitter: float = 0.0

    def predict(self, Z1, Z2):
        return 0.5 * (np.asarray(Z1) @ self.w1 + np.asarray(Z2) @ self.w2) + self.intercept


def _check_xy(Z, y):
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    y = np.asarray(y, dtype=float).ravel()
    if Z.shape[0] != y.shape[0]:
        raise DataError(f"{Z.shape[0]} rows but {y.shape[0]} labels")
    if y.shape[0] < 1:
        raise DataError("need at least one labelled row")
    return Z, y


def _center(y, center):
    mean = float(y.mean()) if center else 0.0
    return y - mean, mean


def _solve_spd(A, b, what):
    """Solve ``A x = b`` for symmetric PSD ``A``; raise if singular."""
    vals = np.linalg.eigvalsh(A)
    top = max(float(vals[-1]), 0.0)
    if top == 0 or vals[0] <= A.shape[0] * np.finfo(float).eps * top:
        raise NumericalError(f"{what}: singular normal equations")
    return scipy.linalg.solve(A, b, assume_a="pos")


def xnv_objective(w, Zbar, y, correlations, gamma, lambda_floor=1e-6,
                  cca_weight=1.0, intercept=0.0):
    """Mean squared error plus canonical-norm and ridge penalties."""
    r = Zbar @ w + intercept - y
    pen = canonical_penalties(correlations, lambda_floor)
    return float(np.mean(r ** 2) + cca_weight * np.sum(pen * w ** 2) + gamma * np.dot(w, w))


def fit_xnv(Zbar_labeled, y, correlations, gamma, lambda_floor=1e-6,
            cca_weight=1.0, center=True):
    """Minimise ``(1/l) sum (w.z - y)^2 + cca_weight*||w||_CCA^2 + gamma*||w||^2``.

    The system is solved exactly through its normal equations. With
    ``center`` the labels are mean-centred first and the mean becomes the
    intercept.
    """
    Z, y = _check_xy(Zbar_labeled, y)
    lam = np.asarray(correlations, dtype=float)
    if lam.shape[0] != Z.shape[1]:
        raise DataError(
            f"{lam.shape[0]} correlations for {Z.shape[1]} canonical features")
    if gamma < 0:
        raise ConfigError("gamma must be nonnegative")
    if cca_weight < 0:
        raise ConfigError("cca_weight must be nonnegative")
    yc, mean = _center(y, center)
    ell = Z.shape[0]
    diag = cca_weight * canonical_penalties(lam, lambda_floor) + gamma
    A = Z.T @ Z / ell + np.diag(diag)
    w = _solve_spd(A, Z.T @ yc / ell, "fit_xnv")
    mse = float(np.mean((Z @ w + mean - y) ** 2))
    return LinearModel(w, mean, mse, info={"gamma": float(gamma),
                                           "cca_weight": float(cca_weight)})


def fit_ridge(Z, y, gamma, center=True):
    """Ridge regression with the same ``1/l`` scaling as ``fit_xnv``."""
    Z, y = _check_xy(Z, y)
    yc, mean = _center(y, center)
    ell = Z.shape[0]
    A = Z.T @ Z / ell + gamma * np.eye(Z.shape[1])
    w = _solve_spd(A, Z.T @ yc / ell, "fit_ridge")
    return LinearModel(w, mean, float(np.mean((Z @ w + mean - y) ** 2)))


def predict(model, Zbar):
    Z = np.asarray(Zbar, dtype=float)
    if Z.ndim == 1:
        Z = Z[None, :]
    if Z.shape[1] != model.weights.shape[0]:
        raise DataError(
            f"dimension mismatch: {Z.shape[1]} features, "
            f"{model.weights.shape[0]} weights")
    return Z @ model.weights + model.intercept


def fit_krr(K_labeled, y, gamma, center=True, train_rows=None, kernel=None):
    """Kernel ridge regression: ``alpha = (K + gamma*l*I)^{-1} y``."""
    K = np.asarray(K_labeled, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] != y.shape[0]:
        raise DataError("K must be square with one row per label")
    if not gamma > 0:
        raise ConfigError("gamma must be positive")
    if np.max(np.abs(K - K.T), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(K))):
        raise DataError("kernel matrix is not symmetric")
    vals = np.linalg.eigvalsh(0.5 * (K + K.T))
    if vals[0] < -1e-8 * max(1.0, abs(vals[-1])):
        raise DataError("kernel matrix is not positive semidefinite")
    yc, mean = _center(y, center)
    ell = K.shape[0]
    alpha = scipy.linalg.solve(K + gamma * ell * np.eye(ell), yc, assume_a="pos")
    rows = None if train_rows is None else np.asarray(train_rows, dtype=float)
    return DualModel(alpha, mean, rows, kernel)


@dataclass(frozen=True)
class SsslPipeline:
    """Nystrom map truncated to its top ``s`` eigen-directions."""

    nmap: Any
    s: int

    def transform(self, X):
        return featurize(self.nmap, X)[:, :self.s]


def fit_sssl_m(X_all, labeled_idx, y, kernel, m, s, seed, rank_tol=1e-10,
               center=True):
    """Randomised spectral regression baseline.

    ``m`` landmarks are drawn from all rows (labelled and unlabelled), and
    ordinary least squares is run on the labelled rows using only the
    ``s`` Nystrom features with the largest eigenvalues.
    """
    X_all = np.asarray(X_all, dtype=float)
    labeled_idx = np.asarray(labeled_idx, dtype=int)
    y = np.asarray(y, dtype=float).ravel()
    if labeled_idx.shape[0] != y.shape[0]:
        raise DataError("one label per labelled index required")
    if not 1 <= s <= m <= X_all.shape[0]:
        raise ConfigError("need 1 <= s <= m <= number of rows")
    rng = np.random.default_rng(seed)
    idx = rng.choice(X_all.shape[0], size=m, replace=False)
    nmap = fit_nystrom_map(X_all, idx, kernel, rank_tol)
    if s > nmap.dim:
        raise ConfigError(f"s={s} exceeds the retained Nystrom rank {nmap.dim}")
    pipe = SsslPipeline(nmap, int(s))
    Z = pipe.transform(X_all[labeled_idx])
    return fit_ols(Z, y, center=center, pipeline=pipe)


def fit_ols(Z, y, center=True, pipeline=None):
    """Minimum-norm least squares."""
    Z, y = _check_xy(Z, y)
    yc, mean = _center(y, center)
    w, *_ = np.linalg.lstsq(Z, yc, rcond=None)
    return LinearModel(w, mean, float(np.mean((Z @ w + mean - y) ** 2)), pipeline)


def corls_objective(w1, w2, Z1_lab, Z2_lab, y, Z1_unl, Z2_unl, a1, a2, a_co,
                    ridge=0.0):
    r1 = a1 * (Z1_lab @ w1) - y
    r2 = a2 * (Z2_lab @ w2) - y
    d = Z1_unl @ w1 - Z2_unl @ w2
    return float(r1 @ r1 + r2 @ r2 + a_co * (d @ d)
                 + ridge * (w1 @ w1 + w2 @ w2))


def fit_corls(Z1_lab, Z2_lab, y, Z1_unl, Z2_unl, a1=1.0, a2=1.0, a_co=1.0,
              ridge=0.0, center=False):
    """Co-regularised least squares, solved as one block linear system.

    Minimises the unnormalised sum
    ``sum_lab (a1 <w1,z1> - y)^2 + (a2 <w2,z2> - y)^2
    + a_co sum_unl (<w1,z1> - <w2,z2>)^2 + ridge (|w1|^2 + |w2|^2)``.
    If the joint system is singular a jitter of ``1e-10 * trace / dim`` is
    added to each diagonal block.
    """
    Z1l, y = _check_xy(Z1_lab, y)
    Z2l, _ = _check_xy(Z2_lab, y)
    Z1u = np.asarray(Z1_unl, dtype=float).reshape(-1, Z1l.shape[1])
    Z2u = np.asarray(Z2_unl, dtype=float).reshape(-1, Z2l.shape[1])
    if Z1u.shape[0] != Z2u.shape[0]:
        raise DataError("unlabelled views have different row counts")
    if min(a1, a2, a_co, ridge) < 0:
        raise ConfigError("coefficients must be nonnegative")
    yc, mean = _center(y, center)
    p = Z1l.shape[1]
    G11 = a1 * a1 * Z1l.T @ Z1l + a_co * Z1u.T @ Z1u + ridge * np.eye(p)
    G22 = a2 * a2 * Z2l.T @ Z2l + a_co * Z2u.T @ Z2u + ridge * np.eye(Z2l.shape[1])
    G12 = -a_co * Z1u.T @ Z2u
    A = np.block([[G11, G12], [G12.T, G22]])
    b = np.concatenate([a1 * Z1l.T @ yc, a2 * Z2l.T @ yc])
    jitter = 0.0
    vals = np.linalg.eigvalsh(A)
    top = max(float(vals[-1]), 0.0)
    if top == 0 or vals[0] <= A.shape[0] * np.finfo(float).eps * top:
        jitter = 1e-10 * max(np.trace(A) / A.shape[0], 1.0)
        A = A + jitter * np.eye(A.shape[0])
    sol = scipy.linalg.solve(A, b, assume_a="sym")
    if not np.all(np.isfinite(sol)):
        raise NumericalError("fit_corls produced non-finite weights")
    return CorlsModel(sol[:p], sol[p:], mean, jitter)
