"""Benchmark harness: XNV against KRR, SSSL_M and CoRLS over labelled-set sizes.

Protocol per (dataset, seed):

1. A test split (``test_frac`` of the labelled rows) is drawn once per seed.
2. For each labelled size ``ell`` a training subset is drawn from the
   remaining labelled rows; every non-test row (labels hidden except for
   the training subset) forms the pool. Landmarks and the CCA fit come
   from the pool, as do the standardisation statistics.
3. Each algorithm selects its hyperparameters by k-fold cross-validation
   on the ``ell`` training rows and is scored by test mean squared error.

Every random choice draws from a substream keyed by (seed, purpose), so
adding or removing an algorithm never changes another one's draws.
"""

import json
import math
import time
import zlib
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from . import __version__
from .cca import LAMBDA_FLOOR_POLICY
from .data import apply_standardization, fit_standardization, load_dataset
from .errors import ConfigError, DataError
from .kernels import KernelSpec, gram_matrix, median_bandwidth
from .nystrom import fit_nystrom_map
from .pipeline import fit_views, fit_xnv_features
from .regressors import fit_corls, fit_krr, fit_ols, fit_xnv, predict

ALGORITHMS = ("xnv", "krr", "sssl", "corls", "xks")
TIMING_FIELDS = ("featurize_time", "train_time", "select_time")
BANDWIDTH_FACTORS = (0.5, 1.0, 2.0, 4.0)
SSSL_S_GRID = (1, 2, 3, 5, 8, 13, 20, 30, 50, 80, 120, 200)


@dataclass
class ExperimentConfig:
    data: list = field(default_factory=list)
    format: str = "csv"
    label: str = "y"
    algos: list = field(default_factory=lambda: ["xnv", "krr", "sssl"])
    kernel: str = "gaussian"
    sigma: Optional[list] = None
    degree: int = 2
    offset: float = 1.0
    landmarks: int = 200
    gamma_grid: list = field(
        default_factory=lambda: [1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 1e-1, 1.0])
    cca_eps: float = 1e-4
    lambda_floor: float = 1e-6
    cca_weight: float = 1.0
    corls_aco_grid: list = field(default_factory=lambda: [1e-3, 1e-2, 1e-1])
    sssl_s: Optional[int] = None
    ell: list = field(default_factory=lambda: [100])
    seeds: list = field(default_factory=lambda: list(range(10)))
    test_frac: float = 0.2
    folds: int = 5
    standardize: bool = True
    warmup: bool = True
    out: Optional[str] = None
    report: str = "json"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.seeds:
            raise ConfigError("seed list must not be empty")
        if not self.ell or min(self.ell) < 1:
            raise ConfigError("labelled sizes must be positive")
        unknown = set(self.algos) - set(ALGORITHMS)
        if unknown or not self.algos:
            raise ConfigError(f"unknown algorithms: {sorted(unknown)}")
        if not 0 < self.test_frac < 1:
            raise ConfigError("test_frac must lie in (0, 1)")
        if self.landmarks < 1:
            raise ConfigError("landmarks must be positive")
        if not self.gamma_grid or min(self.gamma_grid) < 0:
            raise ConfigError("gamma grid must be nonempty and nonnegative")
        if self.cca_eps < 0 or not self.lambda_floor > 0 or self.cca_weight < 0:
            raise ConfigError("invalid CCA parameters")
        if self.folds < 2:
            raise ConfigError("folds must be at least 2")
        if self.report not in ("json", "csv"):
            raise ConfigError("report must be json or csv")
        if self.format not in ("csv", "sparse"):
            raise ConfigError("format must be csv or sparse")
        if self.sigma is not None and min(self.sigma) <= 0:
            raise ConfigError("sigma values must be positive")
        if "xks" in self.algos and self.kernel not in ("gaussian", "rbf"):
            raise ConfigError("xks needs the gaussian kernel")
        self.kernel_spec(1.0)

    def kernel_spec(self, sigma):
        return KernelSpec(self.kernel, bandwidth=sigma, degree=self.degree,
                          offset=self.offset)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_mapping(cls, mapping):
        """Build from a (possibly string-valued) key/value mapping."""
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, value in mapping.items():
            name = key.replace("-", "_")
            if name not in known:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[name] = _coerce(name, value)
        return cls(**kwargs)


_LISTS = {"data": str, "algos": str, "sigma": float, "gamma_grid": float,
          "corls_aco_grid": float, "ell": int, "seeds": int}
_SCALARS = {"format": str, "label": str, "kernel": str, "degree": int,
            "offset": float, "landmarks": int, "cca_eps": float,
            "lambda_floor": float, "cca_weight": float, "sssl_s": int,
            "test_frac": float, "folds": int, "out": str, "report": str}


def _join_synth_params(items):
    # "synth:spiral,n=300" splits into ["synth:spiral", "n=300"]; glue back
    out = []
    for item in items:
        if out and out[-1].startswith("synth:") and "=" in item and ":" not in item:
            out[-1] += "," + item
        else:
            out.append(item)
    return out


def _coerce(name, value):
    try:
        if name in _LISTS:
            if isinstance(value, str):
                value = [v for v in (p.strip() for p in value.split(",")) if v]
            if name == "data":
                value = _join_synth_params(value)
            return [_LISTS[name](v) for v in value]
        if name in ("standardize", "warmup"):
            if isinstance(value, str):
                if value.lower() not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                    raise ValueError(value)
                return value.lower() in ("1", "true", "yes", "on")
            return bool(value)
        if value is None:
            return None
        return _SCALARS[name](value)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {value!r}") from None


def read_config_file(path):
    """Parse a flat ``key = value`` file (``#`` starts a comment)."""
    out = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                key, _, value = line.partition(":")
                if not _:
                    raise ConfigError(f"{path}:{lineno}: expected key = value")
            out[key.strip()] = value.strip()
    return out


# -- randomness ---------------------------------------------------------

def substream(seed, *keys):
    """Integer seed derived from ``seed`` and string purpose keys."""
    entropy = [int(seed)] + [zlib.crc32(str(k).encode()) for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def _folds(n, k, seed):
    k = min(k, n)
    perm = np.random.default_rng(seed).permutation(n)
    return [f for f in np.array_split(perm, k) if f.size]


def _select(candidates, n, folds, y, make_fit_predict):
    """Return the candidate with the smallest CV error (first wins ties)."""
    best, best_err = None, math.inf
    for cand in candidates:
        fp = make_fit_predict(cand)
        err = 0.0
        try:
            for fold in folds:
                train = np.setdiff1d(np.arange(n), fold)
                err += float(np.sum((fp(train, fold) - y[fold]) ** 2))
        except (np.linalg.LinAlgError, ArithmeticError, ValueError):
            continue
        if np.isfinite(err) and err < best_err:
            best, best_err = cand, err
    if best is None:
        raise ConfigError("no hyperparameter candidate could be fitted")
    return best, best_err / n


# -- algorithms ---------------------------------------------------------

@dataclass
class Cell:
    X: np.ndarray
    y: np.ndarray
    train: np.ndarray
    pool: np.ndarray
    test: np.ndarray
    sigmas: list
    config: ExperimentConfig
    seed: int
    ell: int

    @property
    def y_train(self):
        return self.y[self.train]

    def folds(self):
        return _folds(self.train.size, self.config.folds,
                      substream(self.seed, "folds", self.ell))


def _run_xnv(cell, kind):
    cfg = cell.config
    yt = cell.y_train
    folds = cell.folds()
    algo_seed = substream(cell.seed, "algo", "xks" if kind == "rks" else "xnv", cell.ell)
    best = None
    t_select = time.perf_counter()
    for sigma in cell.sigmas:
        t0 = time.perf_counter()
        feats = fit_xnv_features(cell.X[cell.pool], cfg.kernel_spec(sigma),
                                 cfg.landmarks, algo_seed, cfg.cca_eps, kind)
        Z = feats.transform(cell.X[cell.train])
        t_feat = time.perf_counter() - t0
        lam = feats.correlations

        def make(gamma, Z=Z, lam=lam):
            def fp(tr, te):
                m = fit_xnv(Z[tr], yt[tr], lam, gamma, cfg.lambda_floor, cfg.cca_weight)
                return predict(m, Z[te])
            return fp

        gamma, err = _select(cfg.gamma_grid, yt.size, folds, yt, make)
        if best is None or err < best[0]:
            best = (err, sigma, gamma, feats, Z, t_feat)
    select_time = time.perf_counter() - t_select
    _, sigma, gamma, feats, Z, t_feat = best
    t0 = time.perf_counter()
    model = fit_xnv(Z, yt, feats.correlations, gamma, cfg.lambda_floor, cfg.cca_weight)
    train_time = time.perf_counter() - t0
    pred = predict(model, feats.transform(cell.X[cell.test]))
    lam = feats.correlations
    return pred, {"sigma": sigma, "gamma": gamma, "n_canonical": int(lam.size),
                  "top_correlation": float(lam[0]) if lam.size else 0.0}, \
        t_feat, train_time, select_time


def _run_krr(cell):
    cfg = cell.config
    yt = cell.y_train
    folds = cell.folds()
    Xt = cell.X[cell.train]
    best = None
    t_select = time.perf_counter()
    grid = [g for g in cfg.gamma_grid if g > 0]
    for sigma in cell.sigmas:
        t0 = time.perf_counter()
        kernel = cfg.kernel_spec(sigma)
        K = gram_matrix(kernel, Xt)
        t_feat = time.perf_counter() - t0

        def make(gamma, K=K):
            def fp(tr, te):
                m = fit_krr(K[np.ix_(tr, tr)], yt[tr], gamma)
                return K[np.ix_(te, tr)] @ m.dual_weights + m.intercept
            return fp

        gamma, err = _select(grid, yt.size, folds, yt, make)
        if best is None or err < best[0]:
            best = (err, sigma, gamma, K, t_feat)
    select_time = time.perf_counter() - t_select
    _, sigma, gamma, K, t_feat = best
    t0 = time.perf_counter()
    kernel = cfg.kernel_spec(sigma)
    model = fit_krr(K, yt, gamma, train_rows=Xt, kernel=kernel)
    train_time = time.perf_counter() - t0
    return model.predict(cell.X[cell.test]), {"sigma": sigma, "gamma": gamma}, \
        t_feat, train_time, select_time


def _run_sssl(cell):
    cfg = cell.config
    yt = cell.y_train
    folds = cell.folds()
    m = min(2 * cfg.landmarks, cell.pool.size)
    rng_seed = substream(cell.seed, "algo", "sssl", cell.ell)
    idx = cell.pool[np.random.default_rng(rng_seed).choice(cell.pool.size, m, replace=False)]
    best = None
    t_select = time.perf_counter()
    min_fold_train = yt.size - max(f.size for f in folds)
    for sigma in cell.sigmas:
        t0 = time.perf_counter()
        nmap = fit_nystrom_map(cell.X, idx, cfg.kernel_spec(sigma))
        Z = nmap.transform(cell.X[cell.train])
        t_feat = time.perf_counter() - t0
        if cfg.sssl_s is not None:
            if cfg.sssl_s > nmap.dim:
                raise ConfigError(f"sssl_s={cfg.sssl_s} exceeds Nystrom rank {nmap.dim}")
            s_grid = [cfg.sssl_s]
        else:
            s_grid = [s for s in SSSL_S_GRID if s <= nmap.dim and s < min_fold_train] or [1]

        def make(s, Z=Z):
            def fp(tr, te):
                mdl = fit_ols(Z[tr, :s], yt[tr])
                return predict(mdl, Z[te, :s])
            return fp

        s, err = _select(s_grid, yt.size, folds, yt, make)
        if best is None or err < best[0]:
            best = (err, sigma, s, nmap, Z, t_feat)
    select_time = time.perf_counter() - t_select
    _, sigma, s, nmap, Z, t_feat = best
    t0 = time.perf_counter()
    model = fit_ols(Z[:, :s], yt)
    train_time = time.perf_counter() - t0
    pred = predict(model, nmap.transform(cell.X[cell.test])[:, :s])
    return pred, {"sigma": sigma, "s": int(s), "m": int(m)}, t_feat, train_time, select_time


def _run_corls(cell):
    cfg = cell.config
    yt = cell.y_train
    folds = cell.folds()
    unl = np.setdiff1d(cell.pool, cell.train)
    algo_seed = substream(cell.seed, "algo", "corls", cell.ell)
    best = None
    t_select = time.perf_counter()
    candidates = [(a, r) for a in cfg.corls_aco_grid for r in cfg.gamma_grid]
    for sigma in cell.sigmas:
        t0 = time.perf_counter()
        views = fit_views(cell.X[cell.pool], cfg.kernel_spec(sigma), cfg.landmarks, algo_seed)
        Z1, Z2 = views.transform(cell.X[cell.train])
        U1, U2 = views.transform(cell.X[unl])
        t_feat = time.perf_counter() - t0

        def make(cand, Z1=Z1, Z2=Z2, U1=U1, U2=U2):
            a_co, ridge = cand

            def fp(tr, te):
                mdl = fit_corls(Z1[tr], Z2[tr], yt[tr], U1, U2, 1.0, 1.0, a_co,
                                ridge=ridge, center=True)
                return mdl.predict(Z1[te], Z2[te])
            return fp

        cand, err = _select(candidates, yt.size, folds, yt, make)
        if best is None or err < best[0]:
            best = (err, sigma, cand, views, Z1, Z2, U1, U2, t_feat)
    select_time = time.perf_counter() - t_select
    _, sigma, (a_co, ridge), views, Z1, Z2, U1, U2, t_feat = best
    t0 = time.perf_counter()
    model = fit_corls(Z1, Z2, yt, U1, U2, 1.0, 1.0, a_co, ridge=ridge, center=True)
    train_time = time.perf_counter() - t0
    T1, T2 = views.transform(cell.X[cell.test])
    return model.predict(T1, T2), {"sigma": sigma, "a_co": a_co, "ridge": ridge}, \
        t_feat, train_time, select_time


def _run_algo(name, cell):
    if name == "xnv":
        return _run_xnv(cell, "nystrom")
    if name == "xks":
        return _run_xnv(cell, "rks")
    if name == "krr":
        return _run_krr(cell)
    if name == "sssl":
        return _run_sssl(cell)
    if name == "corls":
        return _run_corls(cell)
    raise ConfigError(f"unknown algorithm {name!r}")


# -- experiment ---------------------------------------------------------

@dataclass
class Report:
    config: dict
    results: list
    metadata: dict

    def summary(self):
        return summarize(self.results)

    def to_dict(self):
        aggregates, reductions = self.summary()
        return {"version": __version__, "config": self.config,
                "metadata": self.metadata, "results": self.results,
                "aggregates": aggregates, "reductions": reductions}


def _splits(data, cfg, seed):
    lab = data.labeled_indices
    n_test = max(1, int(round(cfg.test_frac * lab.size)))
    if lab.size - n_test < max(cfg.ell):
        raise ConfigError(
            f"{data.name}: {lab.size} labelled rows cannot supply test split "
            f"{n_test} plus ell={max(cfg.ell)}")
    rng = np.random.default_rng(substream(seed, "split", data.name))
    perm = rng.permutation(lab)
    return np.sort(perm[:n_test]), perm[n_test:]


def _cells(data, cfg, seed):
    test, rest = _splits(data, cfg, seed)
    pool = np.setdiff1d(np.arange(data.n_rows), test)
    if "xnv" in cfg.algos or "corls" in cfg.algos or "sssl" in cfg.algos:
        if pool.size < 2 * cfg.landmarks:
            raise ConfigError(
                f"{data.name}: {pool.size} non-test rows, need {2 * cfg.landmarks} landmarks")
    X = data.features
    if cfg.standardize:
        X = apply_standardization(X, fit_standardization(X[pool]))
    if cfg.sigma:
        sigmas = list(cfg.sigma)
    elif cfg.kernel in ("gaussian", "rbf"):
        base = median_bandwidth(X[pool], seed=substream(seed, "bandwidth"))
        sigmas = [base * f for f in BANDWIDTH_FACTORS]
    else:
        sigmas = [1.0]
    for ell in cfg.ell:
        rng = np.random.default_rng(substream(seed, "labels", data.name, ell))
        train = np.sort(rng.choice(rest, size=ell, replace=False))
        yield Cell(X, data.labels, train, pool, test, sigmas, cfg, seed, ell)


def _check_split_hygiene(cell):
    assert not np.intersect1d(cell.test, cell.pool).size
    assert not np.intersect1d(cell.test, cell.train).size
    assert np.all(np.isin(cell.train, cell.pool))


def run_experiment(config, datasets=None):
    """Run every (dataset, seed, ell, algorithm) cell; deterministic given ``config``."""
    cfg = config
    if datasets is None:
        if not cfg.data:
            raise ConfigError("no datasets configured")
        datasets = [load_dataset(p, cfg.format, cfg.label) for p in cfg.data]
    for d in datasets:
        if d.labeled_indices.size == 0:
            raise DataError(f"{d.name}: no labelled rows")
    results = []
    warm = cfg.warmup
    for data in datasets:
        for seed in cfg.seeds:
            for cell in _cells(data, cfg, seed):
                _check_split_hygiene(cell)
                for algo in cfg.algos:
                    if warm:
                        _run_algo(algo, cell)
                    pred, params, t_feat, t_train, t_sel = _run_algo(algo, cell)
                    mse = float(np.mean((pred - data.labels[cell.test]) ** 2))
                    results.append({
                        "dataset": data.name, "algorithm": algo, "ell": int(cell.ell),
                        "seed": int(seed), "test_mse": mse,
                        "n_test": int(cell.test.size), "n_pool": int(cell.pool.size),
                        "params": params,
                        "featurize_time": t_feat, "train_time": t_train,
                        "select_time": t_sel,
                    })
                warm = False
    metadata = {
        "standardization": "z-score on non-test rows" if cfg.standardize else "none",
        "hyperparameter_selection": f"{cfg.folds}-fold CV on the labelled training rows",
        "bandwidth_grid": ("explicit" if cfg.sigma else
                           f"median distance x {list(BANDWIDTH_FACTORS)}"),
        "lambda_floor": cfg.lambda_floor,
        "lambda_floor_policy": LAMBDA_FLOOR_POLICY,
        "cca_weight": cfg.cca_weight,
        "intercept": "label mean of training rows",
        "sssl_landmarks": "2 * landmarks",
        "timing_fields": list(TIMING_FIELDS),
    }
    return Report(cfg.to_dict(), results, metadata)


def _stderr(values):
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def summarize(results):
    """Aggregates per (dataset, algorithm, ell) and pairwise reductions.

    Reductions compare a target algorithm (``xnv`` if present) against each
    other algorithm as ``(baseline - target) / baseline`` for mean test
    error and for its standard error, averaged over datasets.
    """
    groups = {}
    for r in results:
        groups.setdefault((r["dataset"], r["algorithm"], r["ell"]), []).append(
            (r["seed"], r["test_mse"]))
    aggregates = []
    for (ds, algo, ell), vals in sorted(groups.items()):
        errs = [e for _, e in sorted(vals)]
        aggregates.append({"dataset": ds, "algorithm": algo, "ell": ell,
                           "n_seeds": len(errs), "mean_mse": float(np.mean(errs)),
                           "stderr_mse": _stderr(errs)})
    algos = []
    for r in results:
        if r["algorithm"] not in algos:
            algos.append(r["algorithm"])
    if not algos:
        return aggregates, []
    target = "xnv" if "xnv" in algos else algos[0]
    index = {(a["dataset"], a["algorithm"], a["ell"]): a for a in aggregates}
    datasets = sorted({a["dataset"] for a in aggregates})
    ells = sorted({a["ell"] for a in aggregates})
    reductions = []
    for base in algos:
        if base == target:
            continue
        for metric, key in (("error", "mean_mse"), ("stderr", "stderr_mse")):
            for ell in ells:
                per = []
                for ds in datasets:
                    t, b = index.get((ds, target, ell)), index.get((ds, base, ell))
                    if t is None or b is None or b[key] == 0:
                        continue
                    per.append((b[key] - t[key]) / b[key])
                if per:
                    reductions.append({"metric": metric, "target": target,
                                       "baseline": base, "ell": ell,
                                       "reduction": float(np.mean(per)),
                                       "n_datasets": len(per)})
    return aggregates, reductions


def strip_timing(obj):
    """Copy of a report dict without wall-clock fields."""
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k not in TIMING_FIELDS}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def report_csv_lines(reductions):
    """Table-shaped CSV: one row per comparison metric, one column per ell."""
    ells = sorted({r["ell"] for r in reductions})
    header = ["metric"] + [f"ell={e}" for e in ells]
    rows = {}
    for r in reductions:
        name = f"{r['metric']}_reduction:{r['target']}_vs_{r['baseline']}"
        rows.setdefault(name, {})[r["ell"]] = r["reduction"]
    lines = [",".join(header)]
    for name, vals in rows.items():
        cells = [f"{100 * vals[e]:.2f}%" if e in vals else "" for e in ells]
        lines.append(",".join([name] + cells))
    return lines


def emit_report(report, format="json", path=None):
    """Write the report as JSON or Table-shaped CSV; ``path`` None or '-' means return only."""
    if format == "json":
        text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    elif format == "csv":
        _, reductions = report.summary()
        text = "\n".join(report_csv_lines(reductions))
    else:
        raise ConfigError(f"unknown report format {format!r}")
    text += "\n"
    if path and path != "-":
        try:
            with open(path, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise ConfigError(f"cannot write report to {path}: {exc}") from None
    return text
