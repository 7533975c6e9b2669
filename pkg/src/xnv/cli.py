"""Command line interface: ``xnv featurize|train|eval|bench|bound|selectron``."""

import argparse
import json
import sys

import numpy as np

from . import __version__
from .bench import ExperimentConfig, emit_report, read_config_file, run_experiment
from .bounds import (coregularization_reduction, multiview_excess_risk_bound,
                     rademacher_bound_sq, split_gram_blocks)
from .cca import fit_cca, project_view
from .data import fit_standardization, apply_standardization, load_dataset
from .errors import ConfigError, DataError, NumericalError, XnvError
from .kernels import KernelSpec, gram_matrix, median_bandwidth
from .persist import _map_arrays, load_model, save_model, xnv_arrays
from .pipeline import fit_views, fit_xnv_model
from .regressors import fit_corls, fit_krr, fit_sssl_m
from .selectron import load_scenario, run_scenario


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _data_args(p, required=True):
    p.add_argument("--data", required=required, help="CSV/sparse file or synth:<task>,k=v,...")
    p.add_argument("--format", default="csv", choices=["csv", "sparse"])
    p.add_argument("--label", default="y", help="label column name (CSV)")


def _kernel_args(p):
    p.add_argument("--kernel", default="gaussian", choices=["gaussian", "linear", "poly"])
    p.add_argument("--sigma", type=float, help="gaussian bandwidth (default: median distance)")
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--offset", type=float, default=1.0)
    p.add_argument("--landmarks", type=int, default=200, help="landmarks per view (M)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-standardize", action="store_true")


def _load(args):
    data = load_dataset(args.data, args.format, args.label)
    std = None
    if not getattr(args, "no_standardize", True):
        params = fit_standardization(data.features)
        data.features = apply_standardization(data.features, params)
        std = {k: v.tolist() for k, v in params.items()}
    return data, std


def _kernel(args, X):
    sigma = args.sigma
    if sigma is None:
        sigma = median_bandwidth(X, seed=args.seed) if args.kernel == "gaussian" else 1.0
    return KernelSpec(args.kernel, bandwidth=sigma, degree=args.degree, offset=args.offset)


def _write_matrix(path, header, M):
    text = ",".join(header) + "\n" + "\n".join(
        ",".join(repr(float(v)) for v in row) for row in M)
    if path in (None, "-"):
        sys.stdout.write(text + "\n")
    else:
        try:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        except OSError as exc:
            raise ConfigError(f"cannot write {path}: {exc}") from None


def cmd_featurize(args):
    data, _ = _load(args)
    X = data.features
    kernel = _kernel(args, X)
    views = fit_views(X, kernel, args.landmarks, args.seed, args.views)
    Z1, Z2 = views.transform(X)
    if args.canonical:
        cca = fit_cca(Z1, Z2, args.cca_eps)
        Zbar = project_view(cca, Z1)
        _write_matrix(args.out, [f"zbar{i}" for i in range(Zbar.shape[1])], Zbar)
        return 0
    header = [f"z1_{i}" for i in range(Z1.shape[1])] + [f"z2_{i}" for i in range(Z2.shape[1])]
    _write_matrix(args.out, header, np.hstack([Z1, Z2]))
    return 0


def cmd_train(args):
    data, std = _load(args)
    X = data.features
    lab = data.labeled_indices
    if lab.size == 0:
        raise DataError("no labelled rows to train on")
    y = data.labels[lab]
    kernel = _kernel(args, X)
    meta = {"kernel": kernel.to_dict(), "standardization": std, "version": __version__,
            "gamma": args.gamma, "algo": args.algo}
    if args.algo in ("xnv", "xks"):
        kind = "nystrom" if args.algo == "xnv" else "rks"
        model = fit_xnv_model(X, X[lab], y, kernel, args.landmarks, args.gamma, args.seed,
                              args.cca_eps, args.lambda_floor, args.cca_weight, kind)
        meta.update(model.meta)
        arrays = xnv_arrays(model)
        train_mse = model.linear.train_mse
    elif args.algo == "krr":
        m = fit_krr(gram_matrix(kernel, X[lab]), y, args.gamma, train_rows=X[lab], kernel=kernel)
        arrays = {"train_rows": X[lab], "dual_weights": m.dual_weights,
                  "intercept": np.array(m.intercept)}
        train_mse = float(np.mean((m.predict(X[lab]) - y) ** 2))
    elif args.algo == "sssl":
        s = args.sssl_s or min(20, lab.size - 1) or 1
        m = fit_sssl_m(X, lab, y, kernel, min(2 * args.landmarks, X.shape[0]), s, args.seed)
        arrays = _map_arrays("v1", m.pipeline.nmap)
        arrays.update({"weights": m.weights, "intercept": np.array(m.intercept)})
        meta["s"] = s
        train_mse = m.train_mse
    else:
        views = fit_views(X, kernel, args.landmarks, args.seed)
        unl = data.unlabeled_indices
        Z1, Z2 = views.transform(X[lab])
        U1, U2 = views.transform(X[unl])
        m = fit_corls(Z1, Z2, y, U1, U2, 1.0, 1.0, args.a_co, ridge=args.gamma, center=True)
        arrays = _map_arrays("v1", views.view1)
        arrays.update(_map_arrays("v2", views.view2))
        arrays.update({"w1": m.w1, "w2": m.w2, "intercept": np.array(m.intercept)})
        meta["a_co"] = args.a_co
        train_mse = float(np.mean((m.predict(Z1, Z2) - y) ** 2))
    meta["train_mse"] = train_mse
    save_model(args.out, args.algo, meta, arrays)
    print(json.dumps({"model": args.out, "algo": args.algo, "n_labeled": int(lab.size),
                      "train_mse": train_mse}))
    return 0


def cmd_eval(args):
    model = load_model(args.model)
    data = load_dataset(args.data, args.format, args.label)
    pred = model.predict(data.features)
    lab = data.labeled_mask
    out = {"model": args.model, "n_rows": int(data.n_rows), "n_labeled": int(lab.sum())}
    if lab.any():
        out["mse"] = float(np.mean((pred[lab] - data.labels[lab]) ** 2))
    if args.predictions:
        _write_matrix(args.predictions, ["prediction"], pred[:, None])
    print(json.dumps(out))
    return 0


_BENCH_KEYS = ["data", "format", "label", "algos", "kernel", "sigma", "landmarks",
               "gamma_grid", "cca_eps", "lambda_floor", "cca_weight", "ell", "seeds",
               "test_frac", "out", "report", "degree", "offset", "folds", "sssl_s"]


def cmd_bench(args):
    settings = read_config_file(args.config) if args.config else {}
    for key in _BENCH_KEYS:
        value = getattr(args, key)
        if value is None:
            continue
        settings[key] = value
    if args.no_standardize:
        settings["standardize"] = "false"
    if args.no_warmup:
        settings["warmup"] = "false"
    if "kernel" in settings and settings["kernel"] == "poly":
        settings["kernel"] = "polynomial"
    cfg = ExperimentConfig.from_mapping(settings)
    report = run_experiment(cfg)
    text = emit_report(report, cfg.report, cfg.out)
    if not cfg.out or cfg.out == "-":
        sys.stdout.write(text)
    return 0


def cmd_bound(args):
    data, _ = _load(args)
    X = data.features
    kernel = _kernel(args, X)
    views = fit_views(X, kernel, args.landmarks, args.seed)
    lab = data.labeled_indices
    if lab.size == 0:
        raise DataError("the bound needs labelled rows")
    unl = data.unlabeled_indices
    if args.max_unlabeled is not None and unl.size > args.max_unlabeled:
        rng = np.random.default_rng(args.seed)
        unl = np.sort(rng.choice(unl, args.max_unlabeled, replace=False))
    rows = np.concatenate([unl, lab])
    Z1, Z2 = views.transform(X[rows])
    if args.gram == "linear":
        K1, K2 = Z1 @ Z1.T, Z2 @ Z2.T
    else:
        gk = KernelSpec("gaussian", bandwidth=args.gram_sigma or median_bandwidth(Z1, seed=args.seed))
        K1, K2 = gram_matrix(gk, Z1), gram_matrix(gk, Z2)
    blocks = split_gram_blocks(K1, K2, lab.size)
    F1, F2 = views.transform(X)
    cca = fit_cca(F1, F2, args.cca_eps)
    out = {
        "n_labeled": int(lab.size), "n_unlabeled": int(unl.size), "gram": args.gram,
        "a1": args.a1, "a2": args.a2, "a_co": args.a_co,
        "rademacher_bound_sq": rademacher_bound_sq(blocks, args.a1, args.a2, args.a_co),
        "no_benefit_bound_sq": float((np.trace(blocks.B) / args.a1
                                      + np.trace(blocks.E) / args.a2) / lab.size ** 2),
        "coregularization_reduction": coregularization_reduction(
            blocks, args.a1, args.a2, args.a_co),
        "epsilon": args.epsilon,
        "multiview_excess_risk_bound": multiview_excess_risk_bound(
            args.epsilon, cca.correlations, int(lab.size)),
        "correlations_head": cca.correlations[:10].tolist(),
    }
    text = json.dumps(out, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def cmd_selectron(args):
    sc = load_scenario(args.scenario) if args.scenario else load_scenario({})
    seeds = args.seeds or [sc["seed"]]
    runs = []
    for seed in seeds:
        _, summary = run_scenario(sc, seed=seed)
        runs.append(summary)
    wins = sum(r["mean_mu_spiking"] > r["mean_mu_silent"] for r in runs)
    out = {"scenario": sc, "runs": runs, "specialized_seeds": int(wins),
           "n_seeds": len(runs)}
    text = json.dumps(out, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        for r in runs:
            print(f"seed {r['seed']}: mean mu spiking {r['mean_mu_spiking']:.4f}, "
                  f"silent {r['mean_mu_silent']:.4f}, spike rate {r['spike_rate']:.3f}")
        print(f"specialized in {wins}/{len(runs)} seeds")
    return 0


def _int_list(s):
    return [int(v) for v in s.split(",") if v.strip()]


def build_parser():
    parser = _Parser(prog="xnv", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("featurize", help="write Nystrom / kitchen-sink view features")
    _data_args(p)
    _kernel_args(p)
    p.add_argument("--views", default="nystrom", choices=["nystrom", "rks"])
    p.add_argument("--canonical", action="store_true", help="output CCA view-1 coordinates")
    p.add_argument("--cca-eps", type=float, default=1e-4)
    p.add_argument("--out")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="fit one model on all labelled rows")
    _data_args(p)
    _kernel_args(p)
    p.add_argument("--algo", default="xnv", choices=["xnv", "krr", "sssl", "corls", "xks"])
    p.add_argument("--gamma", type=float, default=1e-3)
    p.add_argument("--cca-eps", type=float, default=1e-4)
    p.add_argument("--lambda-floor", type=float, default=1e-6)
    p.add_argument("--cca-weight", type=float, default=1.0)
    p.add_argument("--sssl-s", type=int)
    p.add_argument("--a-co", type=float, default=1e-2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a saved model")
    _data_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--predictions")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="run the comparison benchmark")
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--data", action="append")
    p.add_argument("--format", choices=["csv", "sparse"])
    p.add_argument("--label")
    p.add_argument("--algos")
    p.add_argument("--kernel", choices=["gaussian", "linear", "poly"])
    p.add_argument("--sigma")
    p.add_argument("--degree")
    p.add_argument("--offset")
    p.add_argument("--landmarks")
    p.add_argument("--gamma-grid")
    p.add_argument("--cca-eps")
    p.add_argument("--lambda-floor")
    p.add_argument("--cca-weight")
    p.add_argument("--ell")
    p.add_argument("--seeds")
    p.add_argument("--test-frac")
    p.add_argument("--folds")
    p.add_argument("--sssl-s")
    p.add_argument("--out")
    p.add_argument("--report", choices=["json", "csv"])
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--no-warmup", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("bound", help="co-regularisation and multiview bounds")
    _data_args(p)
    _kernel_args(p)
    p.add_argument("--a1", type=float, default=1.0)
    p.add_argument("--a2", type=float, default=1.0)
    p.add_argument("--a-co", type=float, default=1.0)
    p.add_argument("--gram", default="linear", choices=["linear", "kernel"])
    p.add_argument("--gram-sigma", type=float)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--cca-eps", type=float, default=1e-4)
    p.add_argument("--max-unlabeled", type=int, default=1000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("selectron", help="train the selectron on a neuromodulation scenario")
    p.add_argument("--scenario", help="JSON scenario file (defaults built in)")
    p.add_argument("--seeds", type=_int_list)
    p.add_argument("--out")
    p.set_defaults(func=cmd_selectron)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except XnvError as exc:
        print(f"xnv: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"xnv: numerical failure: {exc}", file=sys.stderr)
        return NumericalError.exit_code
    except OSError as exc:
        print(f"xnv: error: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
