"""Saving and loading fitted predictors as ``.npz`` archives."""

import json

import numpy as np

from .errors import DataError
from .kernels import KernelSpec
from .nystrom import NystromMap, RksMap


def _map_arrays(prefix, m):
    if isinstance(m, NystromMap):
        return {f"{prefix}_landmarks": m.landmarks, f"{prefix}_projection": m.projection,
                f"{prefix}_eigenvalues": m.eigenvalues}
    return {f"{prefix}_frequencies": m.frequencies, f"{prefix}_phases": m.phases,
            f"{prefix}_scale": np.array(m.scale)}


def _load_map(prefix, arrays, kernel):
    if f"{prefix}_landmarks" in arrays:
        return NystromMap(arrays[f"{prefix}_landmarks"], arrays[f"{prefix}_projection"],
                          kernel, arrays[f"{prefix}_eigenvalues"])
    return RksMap(arrays[f"{prefix}_frequencies"], arrays[f"{prefix}_phases"],
                  float(arrays[f"{prefix}_scale"]))


class Predictor:
    """Raw-input predictor rebuilt from a saved archive."""

    def __init__(self, kind, meta, arrays):
        self.kind = kind
        self.meta = meta
        self.arrays = arrays
        self.kernel = KernelSpec(**meta["kernel"])
        std = meta.get("standardization")
        self.standardization = (None if std is None else
                                {k: np.asarray(v) for k, v in std.items()})

    def _prepare(self, X):
        X = np.asarray(X, dtype=float)
        if self.standardization is not None:
            X = (X - self.standardization["mean"]) / self.standardization["scale"]
        return X

    def predict(self, X):
        X = self._prepare(X)
        a = self.arrays
        if self.kind in ("xnv", "xks"):
            view1 = _load_map("v1", a, self.kernel)
            Z = (view1.transform(X) - a["cca_mean1"]) @ a["cca_basis1"]
            return Z @ a["weights"] + float(a["intercept"])
        if self.kind == "krr":
            from .kernels import gram_matrix
            return gram_matrix(self.kernel, X, a["train_rows"]) @ a["dual_weights"] \
                + float(a["intercept"])
        if self.kind == "sssl":
            view = _load_map("v1", a, self.kernel)
            s = a["weights"].shape[0]
            return view.transform(X)[:, :s] @ a["weights"] + float(a["intercept"])
        if self.kind == "corls":
            v1, v2 = _load_map("v1", a, self.kernel), _load_map("v2", a, self.kernel)
            return 0.5 * (v1.transform(X) @ a["w1"] + v2.transform(X) @ a["w2"]) \
                + float(a["intercept"])
        raise DataError(f"unknown model kind {self.kind!r}")


def save_model(path, kind, meta, arrays):
    meta = dict(meta, kind=kind)
    np.savez(path, __meta__=np.array(json.dumps(meta, sort_keys=True)), **arrays)


def load_model(path):
    try:
        with np.load(path, allow_pickle=False) as z:
            arrays = {k: z[k] for k in z.files}
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read model {path}: {exc}") from None
    if "__meta__" not in arrays:
        raise DataError(f"{path}: not a model archive")
    meta = json.loads(str(arrays.pop("__meta__")))
    return Predictor(meta["kind"], meta, arrays)


def xnv_arrays(model):
    """Arrays needed to predict with an ``XnvModel``."""
    out = _map_arrays("v1", model.features.views.view1)
    out.update(_map_arrays("v2", model.features.views.view2))
    cca = model.features.cca
    out.update({"cca_basis1": cca.basis1, "cca_mean1": cca.mean1,
                "cca_basis2": cca.basis2, "cca_mean2": cca.mean2,
                "correlations": cca.correlations,
                "weights": model.linear.weights,
                "intercept": np.array(model.linear.intercept)})
    return out
