"""Trained predictor, variable importance, model files and the sklearn regressor."""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, check_X_y

from ._validation import check_matrix
from .data import Normalizer, fingerprint
from .exceptions import CorruptFileError, EmptyModelError, SchemaVersionError, ShapeError
from .features import BiasDistribution, FeatureMap, WeightDistribution, evaluate_features, sample_feature_map
from .solver import SolverConfig, SparseCoefficients, harfe_fit

MODEL_SCHEMA_VERSION = 1

IMPORTANCE_MODES = ("magnitude", "count")

__all__ = [
    "HARFERegressor",
    "HarfeModel",
    "ImportanceHistogram",
    "load_model",
    "predict",
    "save_model",
    "variable_importance",
    "write_importance_csv",
]


@dataclass(frozen=True, eq=False)
class HarfeModel:
    """Frozen feature layer plus sparse output weights.

    When ``normalizer`` is set, inputs are standardised before the feature
    layer and predictions are mapped back to the original target units.
    """

    feature_map: FeatureMap
    coefficients: SparseCoefficients
    normalizer: Normalizer | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.coefficients.n_features != self.feature_map.n_features:
            raise ShapeError(
                f"{self.coefficients.n_features} coefficients for {self.feature_map.n_features} features"
            )
        if self.normalizer is not None:
            if self.normalizer.x_mean.shape != (self.feature_map.d,):
                raise ShapeError("normalizer dimension does not match the feature map")
            if np.any(self.normalizer.x_std <= 0) or self.normalizer.y_std <= 0:
                raise ValueError("normalizer standard deviations must be positive")

    @property
    def d(self):
        return self.feature_map.d

    def predict(self, X):
        return predict(self, X)


def predict(model, X):
    """Evaluate ``sum_j c_j phi(<x, w_j> + b_j)`` on the rows of ``X``.

    Only the features in the coefficient support are evaluated.  For complex
    features the real part is returned.
    """
    X = check_matrix(X)
    if X.shape[1] != model.d:
        raise ShapeError(f"X has {X.shape[1]} columns but the model expects d={model.d}")
    if model.normalizer is not None:
        X = model.normalizer.transform_X(X)
    support = model.coefficients.support
    if support.size:
        A_s = evaluate_features(model.feature_map, X, columns=support)
        out = A_s @ model.coefficients.values[support]
    else:
        out = np.zeros(X.shape[0])
    out = np.real(out)
    if model.normalizer is not None:
        out = model.normalizer.inverse_transform_y(out)
    return out


@dataclass(frozen=True, eq=False)
class ImportanceHistogram:
    """Per-input-dimension share of the retained features, in percent."""

    scores: np.ndarray
    mode: str

    def top(self, k):
        """Indices of the ``k`` highest scores (ties to the smaller index)."""
        return np.sort(np.argsort(-self.scores, kind="stable")[:k])

    def to_rows(self):
        return [(i, float(v), self.mode) for i, v in enumerate(self.scores)]


def variable_importance(model, mode="magnitude"):
    """Attribute the retained features to the input dimensions they touch.

    ``mode="count"`` scores dimension ``i`` by how many retained features have a
    nonzero weight on it; ``mode="magnitude"`` sums ``|c_j|`` over those
    features instead.  Scores are rescaled to sum to 100.
    """
    if mode not in IMPORTANCE_MODES:
        raise ValueError(f"mode must be one of {IMPORTANCE_MODES}, got {mode!r}")
    support = model.coefficients.support
    if support.size == 0:
        raise EmptyModelError("model has no nonzero coefficients")
    fmap = model.feature_map
    idx = fmap.indices[support]
    touched = fmap.values[support] != 0
    if mode == "count":
        weights = np.ones(support.size)
    else:
        weights = np.abs(model.coefficients.values[support])
    scores = np.zeros(fmap.d)
    np.add.at(scores, idx[touched], np.broadcast_to(weights[:, None], idx.shape)[touched])
    total = scores.sum()
    if total == 0:
        raise EmptyModelError("retained features carry no weight")
    return ImportanceHistogram(100.0 * scores / total, mode)


def write_importance_csv(hist, path, feature_names=None):
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dimension", "name", "score", "mode"])
        for i, score, mode in hist.to_rows():
            name = feature_names[i] if feature_names else f"x{i + 1}"
            writer.writerow([i, name, repr(score), mode])


def _coefficients_to_dict(coef):
    support = coef.support
    vals = coef.values[support]
    doc = {"N": coef.n_features, "support": support.tolist(), "real": np.real(vals).tolist()}
    if coef.is_complex:
        doc["imag"] = np.imag(vals).tolist()
    return doc


def _coefficients_from_dict(doc):
    n = int(doc["N"])
    support = np.asarray(doc["support"], dtype=np.int64)
    if "imag" in doc:
        values = np.zeros(n, dtype=np.complex128)
        values[support] = np.asarray(doc["real"]) + 1j * np.asarray(doc["imag"])
    else:
        values = np.zeros(n)
        values[support] = doc["real"]
    return SparseCoefficients.from_dense(values)


def model_to_dict(model):
    return {
        "schema_version": MODEL_SCHEMA_VERSION,
        "feature_map": model.feature_map.to_dict(),
        "coefficients": _coefficients_to_dict(model.coefficients),
        "normalizer": None if model.normalizer is None else model.normalizer.to_dict(),
        "metadata": model.metadata,
    }


def model_from_dict(doc):
    if not isinstance(doc, dict):
        raise CorruptFileError("model document must be a JSON object")
    version = doc.get("schema_version")
    if version != MODEL_SCHEMA_VERSION:
        raise SchemaVersionError(
            f"model schema_version {version!r} is not supported (expected {MODEL_SCHEMA_VERSION})"
        )
    try:
        fmap = FeatureMap.from_dict(doc["feature_map"])
        coef = _coefficients_from_dict(doc["coefficients"])
        norm = doc.get("normalizer")
        normalizer = None if norm is None else Normalizer.from_dict(norm)
        return HarfeModel(fmap, coef, normalizer, doc.get("metadata", {}))
    except (KeyError, TypeError, IndexError) as exc:
        raise CorruptFileError(f"malformed model document: {exc!r}") from exc


def save_model(model, path):
    """Write ``model`` as a single JSON document.

    Floats are written with Python's shortest round-trip repr, so loading
    reproduces every weight and coefficient bit for bit.
    """
    Path(path).write_text(json.dumps(model_to_dict(model)))


def load_model(path):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CorruptFileError(f"{path}: not valid JSON ({exc})") from exc
    return model_from_dict(doc)


class HARFERegressor(RegressorMixin, BaseEstimator):
    """Sparse random-feature regressor trained by hard-thresholding pursuit.

    Parameters
    ----------
    n_features : int, default=1000
        Number of random features ``N``.
    order : int, default=2
        Nonzero weights per feature ``q``; clipped to the input dimension.
    sparsity : int, default=100
        Number of features kept in the final model ``s``.
    alpha : float, default=0.0
        Ridge parameter ``lam``; the penalty is ``n_samples * alpha * ||c||^2``.
    m_alpha : float or None, default=None
        Give the product ``n_samples * alpha`` directly; overrides ``alpha``.
    step_size : float, default=0.1
    tol : float, default=0.0
        Stop once ``||A c - y|| / ||y||`` falls to this value.
    max_iter : int, default=50
    activation : {"sin", "complex_exp", "relu", "sigmoid"}, default="sin"
    weight_distribution : {"gaussian", "uniform"}, default="gaussian"
    weight_scale : float, default=1.0
    weight_low, weight_high : float, default=-1.0, 1.0
    bias : {"auto", "none", "uniform"}, default="auto"
    bias_low, bias_high : float, default=0.0, 2*pi
    normalize : bool, default=False
        Standardise inputs and target with training statistics.
    support_stability_stop : bool, default=False
    random_state : int, default=0

    Attributes
    ----------
    model_ : HarfeModel
    report_ : FitReport
    coef_ : ndarray of shape (n_features,)
    support_ : ndarray of int
    n_features_in_ : int
    """

    def __init__(self, n_features=1000, order=2, sparsity=100, alpha=0.0, m_alpha=None,
                 step_size=0.1, tol=0.0, max_iter=50, activation="sin",
                 weight_distribution="gaussian", weight_scale=1.0, weight_low=-1.0,
                 weight_high=1.0, bias="auto", bias_low=0.0, bias_high=2 * np.pi,
                 normalize=False, support_stability_stop=False, random_state=0):
        self.n_features = n_features
        self.order = order
        self.sparsity = sparsity
        self.alpha = alpha
        self.m_alpha = m_alpha
        self.step_size = step_size
        self.tol = tol
        self.max_iter = max_iter
        self.activation = activation
        self.weight_distribution = weight_distribution
        self.weight_scale = weight_scale
        self.weight_low = weight_low
        self.weight_high = weight_high
        self.bias = bias
        self.bias_low = bias_low
        self.bias_high = bias_high
        self.normalize = normalize
        self.support_stability_stop = support_stability_stop
        self.random_state = random_state

    def _bias_distribution(self):
        if self.bias == "auto":
            return BiasDistribution.default_for(self.activation)
        if self.bias == "none":
            return BiasDistribution("none")
        if self.bias == "uniform":
            return BiasDistribution("uniform", self.bias_low, self.bias_high)
        raise ValueError(f"bias must be 'auto', 'none' or 'uniform', got {self.bias!r}")

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        d = X.shape[1]
        normalizer = Normalizer.fit(X, y) if self.normalize else None
        if normalizer is not None:
            X_fit, y_fit = normalizer.transform_X(X), normalizer.transform_y(y)
        else:
            X_fit, y_fit = X, y
        fmap = sample_feature_map(
            d, self.n_features, min(self.order, d),
            WeightDistribution(self.weight_distribution, self.weight_scale, self.weight_low,
                               self.weight_high),
            self._bias_distribution(), self.activation, seed=self.random_state,
        )
        config = SolverConfig(
            s=self.sparsity, mu=self.step_size, lam=self.alpha, m_lambda=self.m_alpha,
            epsilon=self.tol, max_iter=self.max_iter,
            support_stability_stop=self.support_stability_stop,
        )
        coef, report = harfe_fit(evaluate_features(fmap, X_fit), y_fit, config)
        self.model_ = HarfeModel(fmap, coef, normalizer, {
            "params": self.get_params(),
            "dataset_fingerprint": fingerprint(X, y),
            "fit_report": report.summary(include_timing=False),
        })
        self.report_ = report
        self.coef_ = coef.values
        self.support_ = coef.support
        self.n_features_in_ = d
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        return predict(self.model_, X)

    def variable_importance(self, mode="magnitude"):
        check_is_fitted(self, "model_")
        return variable_importance(self.model_, mode)
