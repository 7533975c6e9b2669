"""Generalisation bounds for multiview and co-regularised regression."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConfigError, DataError, NumericalError


@dataclass(frozen=True)
class GramBlocks:
    """Blocks of two Gram matrices with unlabelled rows first.

    ``K1 = [[A, C], [C^T, B]]`` and ``K2 = [[D, F], [F^T, E]]`` where
    ``A, D`` are u x u, ``B, E`` are l x l and ``C, F`` are u x l.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        for name in "ABCDEF":
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        u, ell = self.C.shape if self.C.ndim == 2 else (None, None)
        if ell is None:
            raise DataError("C must be a 2-D block")
        if (self.A.shape != (u, u) or self.D.shape != (u, u)
                or self.B.shape != (ell, ell) or self.E.shape != (ell, ell)
                or self.F.shape != (u, ell)):
            raise DataError("Gram blocks have inconsistent shapes")
        for name in "ABDE":
            M = getattr(self, name)
            if M.size and np.max(np.abs(M - M.T)) > 1e-10 * max(1.0, np.max(np.abs(M))):
                raise DataError(f"block {name} is not symmetric")

    @property
    def n_labeled(self):
        return self.C.shape[1]

    @property
    def n_unlabeled(self):
        return self.C.shape[0]


def split_gram_blocks(K1, K2, labeled_count, ordering=None):
    """Cut two (l+u) x (l+u) Gram matrices into ``GramBlocks``.

    Without ``ordering`` the unlabelled rows come first. ``ordering`` is a
    permutation applied to rows and columns before cutting, so that
    ``ordering[:u]`` lists the unlabelled rows.
    """
    K1 = np.asarray(K1, dtype=float)
    K2 = np.asarray(K2, dtype=float)
    if K1.ndim != 2 or K1.shape[0] != K1.shape[1] or K1.shape != K2.shape:
        raise DataError("K1 and K2 must be square with identical shapes")
    n = K1.shape[0]
    if not 0 <= labeled_count <= n:
        raise DataError(f"labeled_count {labeled_count} outside [0, {n}]")
    if ordering is not None:
        ordering = np.asarray(ordering, dtype=int)
        if sorted(ordering.tolist()) != list(range(n)):
            raise DataError("ordering must be a permutation of the rows")
        K1 = K1[np.ix_(ordering, ordering)]
        K2 = K2[np.ix_(ordering, ordering)]
    u = n - labeled_count
    return GramBlocks(
        A=K1[:u, :u], B=K1[u:, u:], C=K1[:u, u:],
        D=K2[:u, :u], E=K2[u:, u:], F=K2[:u, u:],
    )


def assemble_gram(blocks):
    """Inverse of ``split_gram_blocks`` (identity ordering)."""
    b = blocks
    return (np.block([[b.A, b.C], [b.C.T, b.B]]),
            np.block([[b.D, b.F], [b.F.T, b.E]]))


def _check_coefficients(a1, a2, a_co):
    if not (a1 > 0 and a2 > 0 and a_co > 0):
        raise ConfigError("all coefficients must be positive")
    if not np.isfinite(a_co):
        raise ConfigError("a_co must be finite")


def coregularization_reduction(blocks, a1, a2, a_co):
    """``sum_i ||C_i - F_i||^2`` in the metric ``(I/a_co + A/a1 + D/a2)^{-1}``.

    One Cholesky factorisation of the u x u metric is shared by all labelled
    columns.
    """
    _check_coefficients(a1, a2, a_co)
    u = blocks.n_unlabeled
    if u == 0 or blocks.n_labeled == 0:
        return 0.0
    M = np.eye(u) / a_co + blocks.A / a1 + blocks.D / a2
    try:
        factor = scipy.linalg.cho_factor(M, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("co-regularisation metric is not positive definite") from exc
    diff = blocks.C - blocks.F
    sol = scipy.linalg.cho_solve(factor, diff)
    return float(np.sum(diff * sol))


def rademacher_bound_sq(blocks, a1, a2, a_co):
    """Squared Rademacher complexity bound of the co-regularised class.

    ``(tr B / a1 + tr E / a2 - reduction) / l^2`` with the reduction from
    ``coregularization_reduction``.
    """
    _check_coefficients(a1, a2, a_co)
    ell = blocks.n_labeled
    if ell == 0:
        raise DataError("the bound needs at least one labelled point")
    base = np.trace(blocks.B) / a1 + np.trace(blocks.E) / a2
    return float((base - coregularization_reduction(blocks, a1, a2, a_co)) / ell ** 2)


def multiview_excess_risk_bound(epsilon, correlations, n):
    """``5 * epsilon + sum(lambda_i^2) / n``."""
    if epsilon < 0:
        raise ConfigError("epsilon must be nonnegative")
    if n < 1:
        raise ConfigError("n must be at least 1")
    lam = np.asarray(correlations, dtype=float)
    return float(5.0 * epsilon + np.sum(lam ** 2) / n)
