"""End-to-end XNV: random views and CCA on all rows, then a penalised fit on the labels."""

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .cca import LAMBDA_FLOOR_POLICY, CcaModel, fit_cca, project_view
from .errors import ConfigError
from .nystrom import fit_nystrom_map, fit_rks_map, sample_landmarks
from .regressors import LinearModel, fit_xnv, predict


@dataclass(frozen=True)
class TwoViews:
    """A pair of fitted featurisers (Nystrom or kitchen-sink maps)."""

    view1: Any
    view2: Any
    kind: str = "nystrom"

    def transform(self, X):
        return self.view1.transform(X), self.view2.transform(X)


def fit_views(X_pool, kernel, n_landmarks, seed, kind="nystrom", rank_tol=1e-10):
    """Fit two independent random views on the pooled rows ``X_pool``."""
    X_pool = np.asarray(X_pool, dtype=float)
    if kind == "nystrom":
        idx1, idx2 = sample_landmarks(X_pool, 2 * n_landmarks, seed)
        return TwoViews(fit_nystrom_map(X_pool, idx1, kernel, rank_tol),
                        fit_nystrom_map(X_pool, idx2, kernel, rank_tol), kind)
    if kind == "rks":
        s1, s2 = np.random.SeedSequence(seed).spawn(2)
        d = X_pool.shape[1]
        return TwoViews(fit_rks_map(n_landmarks, kernel, s1, d),
                        fit_rks_map(n_landmarks, kernel, s2, d), kind)
    raise ConfigError(f"unknown view kind {kind!r}")


@dataclass
class XnvFeatures:
    """Views plus CCA fitted on unlabelled+labelled rows; maps X to canonical view-1 coordinates."""

    views: TwoViews
    cca: CcaModel

    def transform(self, X):
        return project_view(self.cca, self.views.view1.transform(X), view=1)

    @property
    def correlations(self):
        return self.cca.correlations


def fit_xnv_features(X_pool, kernel, n_landmarks, seed, reg_eps=1e-4,
                     kind="nystrom", rank_tol=1e-10):
    views = fit_views(X_pool, kernel, n_landmarks, seed, kind, rank_tol)
    Z1, Z2 = views.transform(X_pool)
    return XnvFeatures(views, fit_cca(Z1, Z2, reg_eps))


@dataclass
class XnvModel:
    features: XnvFeatures
    linear: LinearModel
    meta: dict = field(default_factory=dict)

    def predict(self, X):
        return predict(self.linear, self.features.transform(X))


def fit_xnv_model(X_pool, X_lab, y, kernel, n_landmarks, gamma, seed,
                  reg_eps=1e-4, lambda_floor=1e-6, cca_weight=1.0, kind="nystrom",
                  center=True):
    """Run all three XNV steps. ``X_pool`` holds every row used for the views and CCA."""
    feats = fit_xnv_features(X_pool, kernel, n_landmarks, seed, reg_eps, kind)
    lin = fit_xnv(feats.transform(X_lab), y, feats.correlations, gamma,
                  lambda_floor, cca_weight, center)
    meta = {"lambda_floor": lambda_floor, "lambda_floor_policy": LAMBDA_FLOOR_POLICY,
            "cca_weight": cca_weight, "reg_eps": reg_eps, "views": kind}
    return XnvModel(feats, lin, meta)
