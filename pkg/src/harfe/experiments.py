"""Config-driven experiment runs shared by the command-line tools."""

import json
import logging
import time
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .data import Normalizer, load_csv, mse, rel_error, split
from .diagnostics import (DiagnosticsReport, RipEstimate, coherence, convergence_fit, kappa_1s,
                          rip_constant_bruteforce)
from .features import BiasDistribution, WeightDistribution, evaluate_features, sample_feature_map
from .model import HarfeModel, predict
from .solver import SolverConfig, harfe_fit
from .synthetic import SyntheticSpec, generate_dataset

log = logging.getLogger(__name__)

__all__ = [
    "TRIAL_COLUMNS",
    "aggregate_trials",
    "derive_seed",
    "fit_model",
    "planted_instance",
    "run_benchmark",
    "run_diagnostics",
    "run_trial",
]

# streams derived from (master seed, trial index, purpose)
_DATA, _FEATURES, _SPLIT, _VALIDATION = range(4)

TRIAL_COLUMNS = (
    "trial", "lambda", "m_lambda", "n_train", "n_test", "rel_error", "mse", "mse_normalized",
    "iterations", "converged", "final_relative_residual", "support_size",
)


def derive_seed(master, trial, purpose):
    """64-bit seed for ``(master, trial, purpose)`` via numpy's SeedSequence hash."""
    state = np.random.SeedSequence([int(master), int(trial), int(purpose)]).generate_state(1, np.uint64)
    return int(state[0])


def _weight_distribution(cfg):
    w = cfg.features.weights
    return WeightDistribution(w.kind, w.scale, w.low, w.high)


def _bias_distribution(cfg):
    b = cfg.features.bias
    if b.kind == "auto":
        return BiasDistribution.default_for(cfg.features.activation)
    if b.kind == "none":
        return BiasDistribution("none")
    return BiasDistribution("uniform", b.low, b.high)


def load_source(cfg):
    """Read the CSV named in the config (synthetic targets need no loading)."""
    t = cfg.target
    if t.csv is None:
        return None
    path = Path(t.csv)
    if not path.is_file():
        raise FileNotFoundError(f"dataset file not found: {path}")
    return load_csv(path, has_header=t.has_header, target_column=t.target_column,
                    delimiter=t.delimiter)


def make_split(cfg, trial, source=None):
    """Train/test datasets for one trial."""
    t, p = cfg.target, cfg.protocol
    if t.synthetic is not None:
        dist = tuple(t.input_distribution) if t.input_distribution else None
        spec = SyntheticSpec(t.synthetic, t.d, p.m_train or 500, p.m_test or 500, dist,
                             t.noise_sigma, derive_seed(p.seed, trial, _DATA))
        return generate_dataset(spec)
    if source is None:
        source = load_source(cfg)
    seed = derive_seed(p.seed, trial, _SPLIT)
    if p.split_counts is not None:
        return split(source, counts=p.split_counts, seed=seed)
    if p.m_train is not None and p.m_test is not None:
        return split(source, counts=(p.m_train, p.m_test), seed=seed)
    return split(source, fraction=p.split_fraction, seed=seed)


def _solver_config(cfg, lam=None):
    s = cfg.solver
    if lam is None:
        lam = s.lam if s.lam is not None else 0.0
        m_lambda = s.m_lambda
    else:
        m_lambda = None
    return SolverConfig(s=s.s, mu=s.mu, lam=lam, m_lambda=m_lambda, epsilon=s.epsilon,
                        max_iter=s.max_iter, support_stability_stop=s.support_stability_stop)


def fit_model(cfg, train, feature_seed, lam=None):
    """Normalise (optionally), draw features, run the solver.

    Returns ``(model, report)``; the model predicts in the original units.
    """
    normalizer = Normalizer.fit_dataset(train) if cfg.protocol.normalize else None
    X, y = train.X, train.y
    if normalizer is not None:
        X, y = normalizer.transform_X(X), normalizer.transform_y(y)
    fmap = sample_feature_map(train.n_dims, cfg.features.n_features,
                              min(cfg.features.q, train.n_dims), _weight_distribution(cfg),
                              _bias_distribution(cfg), cfg.features.activation, seed=feature_seed)
    solver_cfg = _solver_config(cfg, lam)
    coef, report = harfe_fit(evaluate_features(fmap, X), y, solver_cfg)
    model = HarfeModel(fmap, coef, normalizer, {
        "config": {k: v for k, v in cfg.resolved().items() if k != "output"},
        "dataset_fingerprint": train.fingerprint(),
        "feature_seed": feature_seed,
        "fit_report": report.summary(include_timing=False),
    })
    return model, report


def select_lambda(cfg, train, trial):
    """Pick the sweep value with the lowest validation MSE; the test split is never used."""
    val_seed = derive_seed(cfg.protocol.seed, trial, _VALIDATION)
    sub, val = split(train, fraction=1.0 - cfg.protocol.validation_fraction, seed=val_seed)
    feature_seed = derive_seed(cfg.protocol.seed, trial, _FEATURES)
    scores = []
    for lam in cfg.solver.lambdas:
        model, _ = fit_model(cfg, sub, feature_seed, lam=lam)
        scores.append(mse(val.y, predict(model, val.X)))
    best = int(np.argmin(scores))
    return cfg.solver.lambdas[best], dict(zip(map(repr, cfg.solver.lambdas), scores))


def run_trial(cfg, trial, source=None):
    """One seeded train/fit/evaluate cycle.

    Returns ``(row, model, report, extras)`` where ``row`` holds the
    deterministic metrics listed in :data:`TRIAL_COLUMNS`.
    """
    train, test = make_split(cfg, trial, source)
    sweep = None
    lam = None
    if cfg.solver.lambdas is not None:
        lam, sweep = select_lambda(cfg, train, trial)
    t0 = time.perf_counter()
    model, report = fit_model(cfg, train, derive_seed(cfg.protocol.seed, trial, _FEATURES), lam)
    fit_seconds = time.perf_counter() - t0
    pred = predict(model, test.X)
    row = {
        "trial": trial,
        "lambda": report.lam,
        "m_lambda": report.m_lambda,
        "n_train": train.n_samples,
        "n_test": test.n_samples,
        "rel_error": rel_error(test.y, pred),
        "mse": mse(test.y, pred),
        "mse_normalized": None,
        "iterations": report.iterations_run,
        "converged": report.converged,
        "final_relative_residual": report.final_relative_residual,
        "support_size": int(model.coefficients.support.size),
    }
    if model.normalizer is not None:
        nz = model.normalizer
        row["mse_normalized"] = mse(nz.transform_y(test.y), nz.transform_y(pred))
    extras = {
        "fit_seconds": fit_seconds,
        "wall_time": dict(report.wall_time),
        "lambda_sweep": sweep,
        "train_fingerprint": train.fingerprint(),
        "test_fingerprint": test.fingerprint(),
    }
    return row, model, report, extras


def aggregate_trials(rows, statistic="mean"):
    reduce = np.median if statistic == "median" else np.mean
    out = {"statistic": statistic, "trials": len(rows)}
    for key in ("rel_error", "mse", "mse_normalized", "iterations", "final_relative_residual"):
        vals = [r[key] for r in rows if r[key] is not None]
        out[key] = float(reduce(vals)) if vals else None
    return out


def run_benchmark(cfg, trials=None):
    """Run ``trials`` seeded trials and aggregate them.

    Trials may run in parallel (``protocol.n_jobs``); rows are always returned
    in trial order.
    """
    cfg.require_training()
    trials = cfg.protocol.trials if trials is None else trials
    source = load_source(cfg)

    def one(k):
        row, _, _, extras = run_trial(cfg, k, source)
        return row, extras

    if cfg.protocol.n_jobs != 1 and trials > 1:
        from joblib import Parallel, delayed
        results = Parallel(n_jobs=cfg.protocol.n_jobs)(delayed(one)(k) for k in range(trials))
    else:
        results = [one(k) for k in range(trials)]
    rows = [r for r, _ in results]
    timings = [{"trial": r["trial"], **e} for r, e in results]
    return rows, aggregate_trials(rows, cfg.protocol.aggregate), timings


def _diagnostic_matrix(mc):
    rng = np.random.Generator(np.random.Philox(key=np.array([mc.seed, 0], dtype=np.uint64)))
    if mc.kind == "identity":
        A = np.eye(mc.m, mc.N)
    elif mc.kind == "gaussian":
        A = rng.standard_normal((mc.m, mc.N))
    elif mc.kind == "random_features":
        X = rng.normal(0.0, mc.input_scale, (mc.m, mc.d))
        fmap = sample_feature_map(mc.d, mc.N, mc.q or mc.d, WeightDistribution("gaussian", mc.weight_scale),
                                  BiasDistribution("none"), "complex_exp", seed=mc.seed)
        A = evaluate_features(fmap, X)
    else:
        if mc.path is None or not Path(mc.path).is_file():
            raise FileNotFoundError(f"matrix file not found: {mc.path}")
        A = np.loadtxt(mc.path, delimiter=",", ndmin=2)
    if mc.normalize and mc.kind != "identity":
        A = A / np.sqrt(A.shape[0])
    return A


def planted_instance(m=40, n=10, s=2, seed=0):
    """Normalised Gaussian ``A`` and an ``s``-sparse ``c_star`` with magnitudes 1, 1/2, 1/4, ..."""
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 1], dtype=np.uint64)))
    A = rng.standard_normal((m, n)) / np.sqrt(m)
    support = np.sort(rng.choice(n, size=s, replace=False))
    c_star = np.zeros(n)
    c_star[support] = 0.5 ** np.arange(s) * rng.choice([-1.0, 1.0], size=s)
    return A, c_star


def run_diagnostics(cfg):
    dc = cfg.diagnose
    if dc is None:
        raise ValueError("the diagnose command needs a 'diagnose' section")
    report = DiagnosticsReport()
    A = _diagnostic_matrix(dc.matrix)
    report.notes["matrix"] = {"kind": dc.matrix.kind, "shape": list(A.shape),
                              "normalized": dc.matrix.normalize}
    for s in dc.rip_s:
        report.rip.append(RipEstimate(s, rip_constant_bruteforce(A, s, budget=dc.budget)))
    if dc.coherence and A.shape[1] >= 2:
        report.coherence = coherence(A)
    if dc.planted is not None:
        pc = dc.planted
        A_p, c_star = planted_instance(dc.matrix.m, dc.matrix.N, pc.s, pc.seed)
        coef, fit = harfe_fit(A_p, A_p @ c_star, SolverConfig(
            s=pc.s, mu=pc.mu, lam=pc.lam, max_iter=pc.max_iter, record_iterates=True))
        report.convergence = convergence_fit(fit, c_star)
        report.notes["planted"] = {
            "support_true": np.flatnonzero(c_star).tolist(),
            "support_found": coef.support.tolist(),
            "error": float(np.linalg.norm(coef.values - c_star)),
            "errors": [float(np.linalg.norm(c_star))]
            + [float(np.linalg.norm(c - c_star)) for c in fit.coefficient_trace],
        }
        for s in dc.kappa_s:
            report.kappa[s] = kappa_1s(coef.values, s)
    return report


def write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")
