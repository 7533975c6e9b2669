"""Discretised threshold neuron with selective, co-regularised learning.

Conventions
-----------
* ``excess = <v, x> - theta``; the neuron spikes iff ``excess > 0``
  (a neuron exactly at threshold stays silent).
* ``mu`` is NaN on unlabelled rows.
* Gradients returned here are gradients of the *minimised* objectives, so a
  learning step is ``v - lr * grad``. For selective regression the descent
  direction ``-grad`` equals ``mean((mu - excess) * f * x)``, the reward
  ascent direction.
"""

import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DataError, NumericalError


@dataclass(frozen=True)
class SelectronState:
    v: np.ndarray
    w: np.ndarray
    theta: float = 0.0
    alpha1: float = 1.0
    alpha2: float = 1.0
    alpha_co: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        if np.any(v < 0):
            raise ConfigError("AMPA weights must be nonnegative")
        if not np.isfinite(self.theta):
            raise ConfigError("threshold must be finite")
        if min(self.alpha1, self.alpha2, self.alpha_co) < 0:
            raise ConfigError("coefficients must be nonnegative")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float))


@dataclass(frozen=True)
class NeuroBatch:
    """AMPA patterns ``x`` (binary), NMDA inputs ``z`` and signals ``mu``."""

    x: np.ndarray
    z: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        z = np.asarray(self.z, dtype=float)
        if z.ndim == 1:
            z = z.reshape(x.shape[0], -1)
        mu = np.asarray(self.mu, dtype=float).ravel()
        if not np.all((x == 0) | (x == 1)):
            raise DataError("AMPA patterns must be binary")
        if np.any(np.isinf(mu)) or not np.all(np.isfinite(z)):
            raise DataError("z and mu must be finite (mu may be NaN)")
        if not (x.shape[0] == z.shape[0] == mu.shape[0]):
            raise DataError("inputs and signals need the same number of rows")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "mu", mu)

    @property
    def labeled(self):
        return ~np.isnan(self.mu)

    def subset(self, mask):
        return NeuroBatch(self.x[mask], self.z[mask], self.mu[mask])

    def labeled_part(self):
        return self.subset(self.labeled)

    def unlabeled_part(self):
        return self.subset(~self.labeled)


def _excess(v, theta, x):
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != v.shape[0]:
        raise DataError(f"dimension mismatch: {x.shape[-1]} inputs, {v.shape[0]} weights")
    return x @ v - theta


def spike(v, theta, x):
    """1 if the excess current is strictly positive, else 0 (vectorised over rows)."""
    e = _excess(v, theta, x)
    return (e > 0).astype(int) if np.ndim(e) else int(e > 0)


def _require_labeled(batch):
    if batch.mu.shape[0] == 0:
        raise DataError("batch is empty")
    if not np.all(batch.labeled):
        raise DataError("batch contains unlabelled rows")


def reward(v, theta, batch):
    """Mean of ``mu * excess * spike`` over a labelled batch."""
    _require_labeled(batch)
    e = _excess(v, theta, batch.x)
    return float(np.mean(batch.mu * e * (e > 0)))


def reward_gradient(v, theta, batch):
    _require_labeled(batch)
    e = _excess(v, theta, batch.x)
    f = e > 0
    return (batch.mu * f) @ batch.x / batch.mu.shape[0]


def stdp_update(v, theta, x, mu, lr):
    """One plasticity step: ``max(0, v + lr * mu * x * spike)``."""
    if not lr > 0:
        raise ConfigError("learning rate must be positive")
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)
    if not spike(v, theta, x):
        return v.copy()
    return np.maximum(v + lr * mu * x, 0.0)


def slr_objective(v, theta, batch):
    """Selective linear regression loss ``mean(0.5 * ((mu - excess) * f)^2)``."""
    _require_labeled(batch)
    e = _excess(v, theta, batch.x)
    r = (batch.mu - e) * (e > 0)
    return float(0.5 * np.mean(r ** 2))


def slr_gradient(v, theta, batch):
    """Gradient of ``slr_objective`` in ``v``: ``-mean((mu - excess) f x)``.

    At the spike boundary the silent side is used (the objective's value
    there), which is a valid one-sided choice since ``f`` jumps only where
    the residual is multiplied by zero excess.
    """
    _require_labeled(batch)
    e = _excess(v, theta, batch.x)
    r = (batch.mu - e) * (e > 0)
    return -(r @ batch.x) / batch.mu.shape[0]


def _coopt_parts(state, batch):
    lab = batch.labeled
    if not np.any(lab):
        raise DataError("co-optimisation needs at least one labelled row")
    e = _excess(state.v, state.theta, batch.x)
    if batch.z.shape[1] != state.w.shape[0]:
        raise DataError("dimension mismatch between z and w")
    g = batch.z @ state.w
    return lab, e, g


def coopt_objective(state, batch):
    """Selective co-regularised least squares.

    Mean over labelled rows of ``(a1 e f - mu)^2 + (a2 <w,z> - mu)^2`` plus
    mean over unlabelled rows of ``a_co (e - <w,z>)^2`` (zero when there
    are no unlabelled rows).
    """
    lab, e, g = _coopt_parts(state, batch)
    mu = batch.mu[lab]
    el, gl = e[lab], g[lab]
    sup = np.mean((state.alpha1 * el * (el > 0) - mu) ** 2
                  + (state.alpha2 * gl - mu) ** 2)
    unl = ~lab
    co = state.alpha_co * np.mean((e[unl] - g[unl]) ** 2) if np.any(unl) else 0.0
    return float(sup + co)


def coopt_gradient(state, batch):
    """Gradients of ``coopt_objective`` in ``v`` and ``w`` (theta fixed)."""
    lab, e, g = _coopt_parts(state, batch)
    a1, a2, aco = state.alpha1, state.alpha2, state.alpha_co
    mu = batch.mu[lab]
    xl, zl = batch.x[lab], batch.z[lab]
    f = e[lab] > 0
    r1 = (a1 * e[lab] * f - mu) * (2.0 * a1 * f)
    r2 = (a2 * g[lab] - mu) * (2.0 * a2)
    gv = r1 @ xl / mu.shape[0]
    gw = r2 @ zl / mu.shape[0]
    unl = ~lab
    if np.any(unl):
        d = 2.0 * aco * (e[unl] - g[unl]) / np.count_nonzero(unl)
        gv = gv + d @ batch.x[unl]
        gw = gw - d @ batch.z[unl]
    return gv, gw


def reward_form_objective(state, batch):
    """The multiplicative-modulation reward, evaluated as printed.

    One empirical mean over all rows; unlabelled rows carry no
    neuromodulator (``mu = 0``) but still contribute the modulation and
    regulariser terms. Maximised, not minimised. Only used for comparison
    with ``coopt_objective``.
    """
    e = _excess(state.v, state.theta, batch.x)
    g = batch.z @ state.w
    f = e > 0
    mu = np.where(batch.labeled, batch.mu, 0.0)
    terms = (mu * e * f + mu * g + state.alpha_co * e * g
             - 0.5 * state.alpha1 * e ** 2 * f - 0.5 * state.alpha2 * g ** 2)
    return float(np.mean(terms))


def train_selectron_coopt(init, batch, lr, epochs, seed=0, online=False,
                          max_halvings=30, tol=0.0):
    """Projected (sub)gradient descent on ``coopt_objective``.

    Full-batch mode: each epoch tries ``lr`` and halves the step until the
    objective does not increase (at most ``max_halvings`` times); ``v`` is
    clamped at zero after every step. If no step is accepted the current
    state is a numerical stationary point and training stops early.

    Online mode visits labelled and unlabelled rows one at a time in a
    seeded random order per epoch with a fixed step; it carries no descent
    guarantee.
    """
    if not lr > 0:
        raise ConfigError("learning rate must be positive")
    if epochs < 0:
        raise ConfigError("epochs must be nonnegative")
    state = init
    obj = coopt_objective(state, batch)
    if not np.isfinite(obj):
        raise NumericalError("initial objective is not finite")
    if online:
        return _train_online(state, batch, lr, epochs, seed)
    for _ in range(epochs):
        gv, gw = coopt_gradient(state, batch)
        step = lr
        for _ in range(max_halvings + 1):
            cand = replace(state, v=np.maximum(state.v - step * gv, 0.0),
                           w=state.w - step * gw)
            new = coopt_objective(cand, batch)
            if not np.isfinite(new):
                raise NumericalError("objective became non-finite")
            if new <= obj:
                break
            step *= 0.5
        else:
            break
        improvement = obj - new
        state, obj = cand, new
        if improvement <= tol * max(abs(obj), 1.0):
            break
    return state


def _train_online(state, batch, lr, epochs, seed):
    rng = np.random.default_rng(seed)
    lab = batch.labeled
    n_lab = max(np.count_nonzero(lab), 1)
    n_unl = max(np.count_nonzero(~lab), 1)
    v, w = state.v.copy(), state.w.copy()
    a1, a2, aco = state.alpha1, state.alpha2, state.alpha_co
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(epochs):
            for i in rng.permutation(batch.mu.shape[0]):
                x, z = batch.x[i], batch.z[i]
                e = x @ v - state.theta
                g = z @ w
                if lab[i]:
                    f = float(e > 0)
                    gv = 2 * a1 * f * (a1 * e * f - batch.mu[i]) * x / n_lab
                    gw = 2 * a2 * (a2 * g - batch.mu[i]) * z / n_lab
                else:
                    d = 2 * aco * (e - g) / n_unl
                    gv, gw = d * x, -d * z
                v = np.maximum(v - lr * gv, 0.0)
                w = w - lr * gw
                if not (np.all(np.isfinite(v)) and np.all(np.isfinite(w))):
                    raise NumericalError("online training diverged")
    return replace(state, v=v, w=w)


# -- synthetic neuromodulation scenarios --------------------------------

SCENARIO_DEFAULTS = {
    "n_inputs": 10,
    "n_nmda": None,
    "rule": {"type": "and", "bits": [0, 1], "mu_on": 1.0, "mu_off": -1.0,
             "noise": 0.1},
    "p_active": 0.5,
    "nmda_noise": 0.3,
    "n_labeled": 200,
    "n_unlabeled": 1000,
    "n_test": 1000,
    "seed": 0,
    "init_weight": 0.3,
    "theta": 1.0,
    "alpha1": 1.0,
    "alpha2": 1.0,
    "alpha_co": 1.0,
    "lr": 0.5,
    "epochs": 500,
}

_RULES = {
    "and": lambda b: np.all(b, axis=1),
    "or": lambda b: np.any(b, axis=1),
    "xor": lambda b: np.logical_xor.reduce(b, axis=1),
}


def load_scenario(path_or_dict):
    """Read a JSON scenario and fill unspecified keys with defaults."""
    if isinstance(path_or_dict, dict):
        raw = dict(path_or_dict)
    else:
        try:
            with open(path_or_dict) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"scenario is not valid JSON: {exc}") from exc
    unknown = set(raw) - set(SCENARIO_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
    sc = {**SCENARIO_DEFAULTS, **raw}
    sc["rule"] = {**SCENARIO_DEFAULTS["rule"], **raw.get("rule", {})}
    if sc["rule"]["type"] not in _RULES:
        raise ConfigError(f"unknown rule type {sc['rule']['type']!r}")
    bits = sc["rule"]["bits"]
    if not bits or max(bits) >= sc["n_inputs"] or min(bits) < 0:
        raise ConfigError("rule bits must index AMPA inputs")
    if sc["n_labeled"] < 1:
        raise ConfigError("at least one labelled row is required")
    return sc


def _draw(sc, n, rng):
    N = sc["n_inputs"]
    x = (rng.random((n, N)) < sc["p_active"]).astype(float)
    rule = sc["rule"]
    on = _RULES[rule["type"]](x[:, rule["bits"]].astype(bool))
    mu = np.where(on, rule["mu_on"], rule["mu_off"]) + rule["noise"] * rng.normal(size=n)
    n_nmda = sc["n_nmda"] or N
    z = np.zeros((n, n_nmda))
    k = min(N, n_nmda)
    z[:, :k] = x[:, :k]
    z += sc["nmda_noise"] * rng.normal(size=z.shape)
    return x, z, mu


def make_scenario_data(sc, seed=None):
    """Training batch (labelled + unlabelled rows) and a labelled test batch."""
    sc = load_scenario(sc)
    rng = np.random.default_rng(sc["seed"] if seed is None else seed)
    n_l, n_u = sc["n_labeled"], sc["n_unlabeled"]
    x, z, mu = _draw(sc, n_l + n_u, rng)
    mu[n_l:] = np.nan
    xt, zt, mut = _draw(sc, sc["n_test"], rng)
    return NeuroBatch(x, z, mu), NeuroBatch(xt, zt, mut)


def initial_state(sc):
    sc = load_scenario(sc)
    n_nmda = sc["n_nmda"] or sc["n_inputs"]
    return SelectronState(
        v=np.full(sc["n_inputs"], float(sc["init_weight"])),
        w=np.zeros(n_nmda),
        theta=float(sc["theta"]),
        alpha1=float(sc["alpha1"]),
        alpha2=float(sc["alpha2"]),
        alpha_co=float(sc["alpha_co"]),
    )


def specialization(state, test):
    """Mean ``mu`` on spiking and on silent test rows (NaN if a set is empty)."""
    f = spike(state.v, state.theta, test.x).astype(bool)
    on = float(np.mean(test.mu[f])) if np.any(f) else float("nan")
    off = float(np.mean(test.mu[~f])) if np.any(~f) else float("nan")
    return {"mean_mu_spiking": on, "mean_mu_silent": off,
            "spike_rate": float(np.mean(f))}


def run_scenario(sc, seed=None):
    """Train on a scenario and summarise the resulting neuron."""
    sc = load_scenario(sc)
    seed = sc["seed"] if seed is None else seed
    train, test = make_scenario_data(sc, seed)
    init = initial_state(sc)
    state = train_selectron_coopt(init, train, sc["lr"], sc["epochs"], seed=seed)
    out = specialization(state, test)
    out.update({
        "seed": int(seed),
        "objective_initial": coopt_objective(init, train),
        "objective_final": coopt_objective(state, train),
        "reward_form_final": reward_form_objective(state, train),
        "v": state.v.tolist(),
        "w": state.w.tolist(),
    })
    return state, out
