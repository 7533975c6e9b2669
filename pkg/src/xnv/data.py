"""Dataset ingestion plus standardisation and a synthetic two-view task."""

import csv
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ConfigError, DataError

_MISSING = {"", "na", "nan", "?", "none", "null"}


@dataclass
class Dataset:
    """Feature matrix with optional labels (NaN marks an unlabelled row)."""

    features: np.ndarray
    labels: np.ndarray
    name: str = "data"
    standardization: Optional[dict] = None
    feature_names: list = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        self.labels = np.asarray(self.labels, dtype=float).ravel()
        if self.labels.shape[0] != self.features.shape[0]:
            raise DataError("one label slot per row required")
        if not np.all(np.isfinite(self.features)):
            raise DataError("features contain non-finite values")

    @property
    def n_rows(self):
        return self.features.shape[0]

    @property
    def labeled_mask(self):
        return np.isfinite(self.labels)

    @property
    def labeled_indices(self):
        return np.flatnonzero(self.labeled_mask)

    @property
    def unlabeled_indices(self):
        return np.flatnonzero(~self.labeled_mask)


def _parse_label(token):
    if token.strip().lower() in _MISSING:
        return np.nan
    value = float(token)
    return value if np.isfinite(value) else np.nan


def load_csv(path, label_field="y", name=None):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if label_field not in header:
            raise DataError(f"{path}: no label column {label_field!r} in header")
        li = header.index(label_field)
        cols = [i for i in range(len(header)) if i != li]
        if not cols:
            raise DataError(f"{path}: no feature columns")
        rows, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: line {lineno} has {len(row)} fields, expected {len(header)}")
            try:
                labels.append(_parse_label(row[li]))
            except ValueError:
                raise DataError(
                    f"{path}: line {lineno}, column {label_field!r}: "
                    f"non-numeric label {row[li]!r}") from None
            vals = []
            for i in cols:
                try:
                    v = float(row[i])
                except ValueError:
                    raise DataError(
                        f"{path}: line {lineno}, column {header[i]!r}: "
                        f"non-numeric value {row[i]!r}") from None
                if not np.isfinite(v):
                    raise DataError(
                        f"{path}: line {lineno}, column {header[i]!r}: non-finite value")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return Dataset(np.array(rows), np.array(labels), name or str(path),
                   feature_names=[header[i] for i in cols])


def load_sparse(path, name=None):
    """Read ``label idx:val ...`` lines (1-based indices).

    A line whose first token is an ``idx:val`` pair, or whose label is one
    of the missing markers (``?``, ``nan``, ...), is unlabelled.
    """
    entries, labels = [], []
    dim = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            if ":" in tokens[0]:
                label = np.nan
            else:
                try:
                    label = _parse_label(tokens[0])
                except ValueError:
                    raise DataError(
                        f"{path}: line {lineno}: non-numeric label {tokens[0]!r}") from None
                tokens = tokens[1:]
            row = {}
            for tok in tokens:
                try:
                    idx, val = tok.split(":", 1)
                    idx, val = int(idx), float(val)
                except ValueError:
                    raise DataError(
                        f"{path}: line {lineno}: malformed entry {tok!r}") from None
                if idx < 1:
                    raise DataError(f"{path}: line {lineno}: index {idx} must be >= 1")
                if not np.isfinite(val):
                    raise DataError(f"{path}: line {lineno}, column {idx}: non-finite value")
                row[idx - 1] = val
                dim = max(dim, idx)
            entries.append(row)
            labels.append(label)
    if not entries:
        raise DataError(f"{path}: no data rows")
    if dim == 0:
        raise DataError(f"{path}: no feature columns")
    X = np.zeros((len(entries), dim))
    for r, row in enumerate(entries):
        for c, v in row.items():
            X[r, c] = v
    return Dataset(X, np.array(labels), name or str(path),
                   feature_names=[str(i + 1) for i in range(dim)])


def load_dataset(path, format="csv", label_field="y"):
    """Load a dataset; rows keep file order.

    ``path`` may also be a synthetic task spec such as
    ``synth:spiral,n=5000,n_labeled=200,seed=3``.
    """
    path = str(path)
    if path.startswith("synth:"):
        return synthetic_from_spec(path)
    try:
        if format == "csv":
            return load_csv(path, label_field)
        if format == "sparse":
            return load_sparse(path)
    except FileNotFoundError:
        raise DataError(f"{path}: file not found") from None
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not a text file ({exc})") from None
    raise ConfigError(f"unknown data format {format!r}")


def fit_standardization(X):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return {"mean": mean, "scale": scale}


def apply_standardization(X, params):
    return (np.asarray(X, dtype=float) - params["mean"]) / params["scale"]


def standardize(data, rows=None):
    """Z-score columns using statistics of ``rows`` (default: all rows)."""
    ref = data.features if rows is None else data.features[rows]
    params = fit_standardization(ref)
    return replace(data, features=apply_standardization(data.features, params),
                   standardization={k: v.tolist() for k, v in params.items()})


# -- synthetic two-view task -------------------------------------------

def make_spiral_task(n=5000, n_labeled=200, curvature=1.25, noise=0.05,
                     label_noise=0.1, latent_dim=5, seed=0):
    """Latent Gaussian signal embedded along per-coordinate spirals.

    ``t ~ N(0, I)`` in ``latent_dim`` dimensions; each latent coordinate
    ``t_i`` maps to the planar point ``(1 + 0.3 t_i) (cos a_i, sin a_i)``
    with angle ``a_i = curvature * t_i + pi``, giving ``2 * latent_dim``
    observed columns plus independent Gaussian noise. The target is
    ``sum(t) / sqrt(latent_dim)`` plus label noise. The first
    ``n_labeled`` rows are labelled.
    """
    if not 0 < n_labeled <= n:
        raise ConfigError("need 0 < n_labeled <= n")
    rng = np.random.default_rng(seed)
    t = rng.normal(size=(n, latent_dim))
    angle = curvature * t + np.pi
    radius = 1.0 + 0.3 * t
    X = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)], axis=1)
    X += noise * rng.normal(size=X.shape)
    y = t.sum(axis=1) / np.sqrt(latent_dim) + label_noise * rng.normal(size=n)
    y[n_labeled:] = np.nan
    return Dataset(X, y, f"spiral(n={n},l={n_labeled},c={curvature},seed={seed})")


_SYNTH = {"spiral": make_spiral_task}


def synthetic_from_spec(spec):
    body = spec[len("synth:"):]
    kind, _, rest = body.partition(",")
    if kind not in _SYNTH:
        raise ConfigError(f"unknown synthetic task {kind!r}")
    kwargs = {}
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"bad synthetic parameter {item!r}")
        kwargs[key.strip()] = float(value) if "." in value or "e" in value else int(value)
    try:
        data = _SYNTH[kind](**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    data.name = spec
    return data
