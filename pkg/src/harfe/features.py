"""Frozen random layer with q-sparse weight columns.

Each feature ``j`` owns a weight vector that is nonzero on exactly ``q`` of the
``d`` input coordinates, plus a scalar bias.  Feature values are
``phi(<x, w_j> + b_j)``.

Randomness is drawn column by column from a Philox4x64 counter-based generator
keyed by ``(seed, j)``.  Column ``j`` therefore depends only on the seed and its
own index, so growing ``N`` never reshuffles existing columns and results are
identical on every platform numpy supports.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_matrix, check_positive_int, check_seed
from .exceptions import CorruptFileError, InvalidOrderError, InvalidSizeError, SchemaVersionError, ShapeError

FEATURE_MAP_SCHEMA_VERSION = 1

ACTIVATIONS = ("sin", "complex_exp", "relu", "sigmoid")
COMPLEX_ACTIVATIONS = frozenset({"complex_exp"})

__all__ = [
    "ACTIVATIONS",
    "BiasDistribution",
    "FeatureMap",
    "SparseRandomFeatures",
    "WeightDistribution",
    "evaluate_features",
    "sample_feature_map",
]


@dataclass(frozen=True)
class WeightDistribution:
    """Distribution of the nonzero weight entries.

    ``kind="gaussian"`` draws N(0, scale**2); ``kind="uniform"`` draws U[low, high].
    """

    kind: str = "gaussian"
    scale: float = 1.0
    low: float = -1.0
    high: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "uniform"):
            raise ValueError(f"unknown weight distribution {self.kind!r}")
        if self.kind == "gaussian" and not self.scale > 0:
            raise ValueError("gaussian scale must be positive")
        if self.kind == "uniform" and not self.high > self.low:
            raise ValueError("uniform bounds need high > low")

    def draw(self, rng, size):
        if self.kind == "gaussian":
            return rng.normal(0.0, self.scale, size)
        return rng.uniform(self.low, self.high, size)

    def to_dict(self):
        if self.kind == "gaussian":
            return {"kind": "gaussian", "scale": self.scale}
        return {"kind": "uniform", "low": self.low, "high": self.high}

    @classmethod
    def from_dict(cls, doc):
        return cls(**doc)


@dataclass(frozen=True)
class BiasDistribution:
    """``kind="none"`` gives zero biases; ``kind="uniform"`` draws U[low, high]."""

    kind: str = "uniform"
    low: float = 0.0
    high: float = 2 * np.pi

    def __post_init__(self):
        if self.kind not in ("none", "uniform"):
            raise ValueError(f"unknown bias distribution {self.kind!r}")
        if self.kind == "uniform" and not self.high >= self.low:
            raise ValueError("uniform bounds need high >= low")

    def draw(self, rng):
        if self.kind == "none":
            return 0.0
        return rng.uniform(self.low, self.high)

    def to_dict(self):
        if self.kind == "none":
            return {"kind": "none"}
        return {"kind": "uniform", "low": self.low, "high": self.high}

    @classmethod
    def from_dict(cls, doc):
        return cls(**doc)

    @classmethod
    def default_for(cls, activation):
        """U[0, 2pi] phases for real activations, no bias for complex exponentials."""
        if activation in COMPLEX_ACTIVATIONS:
            return cls("none")
        return cls("uniform", 0.0, 2 * np.pi)


def _column_rng(seed, j):
    key = np.array([seed, j], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _frozen(a):
    a = np.array(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Immutable random hidden layer.

    Weights are stored column-sparse: ``indices[j]`` holds the sorted input
    coordinates touched by feature ``j`` and ``values[j]`` the matching weights.
    Use :meth:`dense_weights` for a ``(d, N)`` matrix.
    """

    d: int
    q: int
    activation: str
    indices: np.ndarray
    values: np.ndarray
    biases: np.ndarray
    weight_distribution: WeightDistribution = field(default_factory=WeightDistribution)
    bias_distribution: BiasDistribution = field(default_factory=BiasDistribution)
    seed: int = 0

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}; choose from {ACTIVATIONS}")
        if not 1 <= self.q <= self.d:
            raise InvalidOrderError(f"q must satisfy 1 <= q <= d={self.d}, got {self.q}")
        indices = np.asarray(self.indices, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        biases = np.asarray(self.biases, dtype=np.float64)
        if indices.ndim != 2 or indices.shape[1] != self.q or indices.shape[0] < 1:
            raise ShapeError(f"indices must have shape (N, {self.q}), got {indices.shape}")
        if values.shape != indices.shape:
            raise ShapeError("values and indices shapes differ")
        if biases.shape != (indices.shape[0],):
            raise ShapeError("biases must have one entry per feature")
        if indices.min() < 0 or indices.max() >= self.d:
            raise ValueError("weight indices out of range")
        if self.q > 1 and np.any(np.diff(indices, axis=1) <= 0):
            raise ValueError("weight indices must be strictly increasing within each column")
        object.__setattr__(self, "indices", _frozen(indices))
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "biases", _frozen(biases))

    @property
    def n_features(self):
        return self.indices.shape[0]

    @property
    def is_complex(self):
        return self.activation in COMPLEX_ACTIVATIONS

    def dense_weights(self):
        """Return the ``(d, N)`` weight matrix."""
        W = np.zeros((self.d, self.n_features))
        cols = np.broadcast_to(np.arange(self.n_features)[:, None], self.indices.shape)
        W[self.indices, cols] = self.values
        return W

    def mask(self):
        """Boolean ``(d, N)`` connectivity pattern."""
        M = np.zeros((self.d, self.n_features), dtype=bool)
        cols = np.broadcast_to(np.arange(self.n_features)[:, None], self.indices.shape)
        M[self.indices, cols] = True
        return M

    def to_dict(self):
        return {
            "schema_version": FEATURE_MAP_SCHEMA_VERSION,
            "d": self.d,
            "N": self.n_features,
            "q": self.q,
            "activation": self.activation,
            "distribution": self.weight_distribution.to_dict(),
            "bias_distribution": self.bias_distribution.to_dict(),
            "seed": self.seed,
            "biases": self.biases.tolist(),
            "columns": [
                {"indices": idx.tolist(), "values": val.tolist()}
                for idx, val in zip(self.indices, self.values)
            ],
        }

    @classmethod
    def from_dict(cls, doc):
        version = doc.get("schema_version")
        if version != FEATURE_MAP_SCHEMA_VERSION:
            raise SchemaVersionError(
                f"feature map schema_version {version!r} is not supported "
                f"(expected {FEATURE_MAP_SCHEMA_VERSION})"
            )
        try:
            columns = doc["columns"]
            fmap = cls(
                d=int(doc["d"]),
                q=int(doc["q"]),
                activation=doc["activation"],
                indices=[c["indices"] for c in columns],
                values=[c["values"] for c in columns],
                biases=doc["biases"],
                weight_distribution=WeightDistribution.from_dict(doc["distribution"]),
                bias_distribution=BiasDistribution.from_dict(doc["bias_distribution"]),
                seed=int(doc["seed"]),
            )
        except (KeyError, TypeError) as exc:
            raise CorruptFileError(f"malformed feature map document: {exc!r}") from exc
        if fmap.n_features != int(doc["N"]):
            raise CorruptFileError("declared N does not match the number of columns")
        return fmap

    def to_json(self):
        # repr-based float formatting in json round-trips float64 exactly
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CorruptFileError(f"feature map is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)


def sample_feature_map(d, n_features, q, weight_distribution=None, bias_distribution=None,
                       activation="sin", seed=0):
    """Draw a :class:`FeatureMap` with exactly ``min(q, d)`` nonzeros per column.

    For every column the ``q`` active coordinates are a uniformly random subset
    of ``range(d)`` and their weights are i.i.d. from ``weight_distribution``.
    ``bias_distribution`` defaults to U[0, 2pi] for real activations and to no
    bias for ``"complex_exp"``.
    """
    d = check_positive_int(d, "d")
    if isinstance(n_features, bool) or not isinstance(n_features, (int, np.integer)) or n_features < 1:
        raise InvalidSizeError(f"number of features must be a positive integer, got {n_features!r}")
    if isinstance(q, bool) or not isinstance(q, (int, np.integer)) or not 1 <= q <= d:
        raise InvalidOrderError(f"q must satisfy 1 <= q <= d={d}, got {q!r}")
    if activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}; choose from {ACTIVATIONS}")
    seed = check_seed(seed)
    weight_distribution = weight_distribution or WeightDistribution()
    bias_distribution = bias_distribution or BiasDistribution.default_for(activation)

    n_features, q = int(n_features), int(q)
    indices = np.empty((n_features, q), dtype=np.int64)
    values = np.empty((n_features, q))
    biases = np.empty(n_features)
    for j in range(n_features):
        rng = _column_rng(seed, j)
        indices[j] = np.sort(rng.choice(d, size=q, replace=False))
        values[j] = weight_distribution.draw(rng, q)
        biases[j] = bias_distribution.draw(rng)
    return FeatureMap(
        d=d,
        q=q,
        activation=activation,
        indices=indices,
        values=values,
        biases=biases,
        weight_distribution=weight_distribution,
        bias_distribution=bias_distribution,
        seed=seed,
    )


def _activate(Z, activation):
    if activation == "sin":
        return np.sin(Z, out=Z)
    if activation == "complex_exp":
        return np.exp(1j * Z)
    if activation == "relu":
        return np.maximum(Z, 0.0, out=Z)
    if activation == "sigmoid":
        return expit(Z, out=Z)
    raise ValueError(f"unknown activation {activation!r}")


def evaluate_features(fmap, X, columns=None):
    """Return the random feature matrix ``A`` with ``A[k, j] = phi(<x_k, w_j> + b_j)``.

    Parameters
    ----------
    fmap : FeatureMap
    X : array of shape (m, d)
        One sample per row.
    columns : array of int, optional
        Evaluate only these features (in the given order).

    Returns
    -------
    ndarray of shape (m, N) or (m, len(columns))
        ``complex128`` for ``"complex_exp"``, ``float64`` otherwise.

    Notes
    -----
    Inner products use only the ``q`` stored weights per column, so the cost is
    ``O(m * N * q)`` regardless of ``d``.  Rows are processed independently.
    """
    X = check_matrix(X)
    if X.shape[1] != fmap.d:
        raise ShapeError(f"X has {X.shape[1]} columns but the feature map expects d={fmap.d}")
    idx, vals, b = fmap.indices, fmap.values, fmap.biases
    if columns is not None:
        columns = np.asarray(columns, dtype=np.int64)
        idx, vals, b = idx[columns], vals[columns], b[columns]
    Z = np.empty((X.shape[0], idx.shape[0]))
    Z[:] = b
    for t in range(fmap.q):
        Z += X[:, idx[:, t]] * vals[:, t]
    return _activate(Z, fmap.activation)


class SparseRandomFeatures(TransformerMixin, BaseEstimator):
    """Map inputs through a frozen layer of q-sparse random features.

    Parameters
    ----------
    n_features : int, default=1000
        Number of random features ``N``.
    order : int, default=2
        Nonzero weights per feature ``q``; clipped to the input dimension.
    activation : {"sin", "complex_exp", "relu", "sigmoid"}, default="sin"
    weight_distribution : {"gaussian", "uniform"}, default="gaussian"
    weight_scale : float, default=1.0
        Standard deviation for gaussian weights.
    weight_low, weight_high : float, default=-1.0, 1.0
        Bounds for uniform weights.
    bias : {"auto", "none", "uniform"}, default="auto"
        ``"auto"`` picks U[0, 2pi] for real activations and none for complex.
    bias_low, bias_high : float, default=0.0, 2*pi
    random_state : int, default=0

    Attributes
    ----------
    feature_map_ : FeatureMap
    n_features_in_ : int
    """

    def __init__(self, n_features=1000, order=2, activation="sin", weight_distribution="gaussian",
                 weight_scale=1.0, weight_low=-1.0, weight_high=1.0, bias="auto", bias_low=0.0,
                 bias_high=2 * np.pi, random_state=0):
        self.n_features = n_features
        self.order = order
        self.activation = activation
        self.weight_distribution = weight_distribution
        self.weight_scale = weight_scale
        self.weight_low = weight_low
        self.weight_high = weight_high
        self.bias = bias
        self.bias_low = bias_low
        self.bias_high = bias_high
        self.random_state = random_state

    def _distributions(self):
        wdist = WeightDistribution(self.weight_distribution, self.weight_scale, self.weight_low,
                                   self.weight_high)
        if self.bias == "auto":
            bdist = BiasDistribution.default_for(self.activation)
        elif self.bias == "none":
            bdist = BiasDistribution("none")
        elif self.bias == "uniform":
            bdist = BiasDistribution("uniform", self.bias_low, self.bias_high)
        else:
            raise ValueError(f"bias must be 'auto', 'none' or 'uniform', got {self.bias!r}")
        return wdist, bdist

    def fit(self, X, y=None):
        X = check_matrix(X)
        wdist, bdist = self._distributions()
        d = X.shape[1]
        self.feature_map_ = sample_feature_map(
            d, self.n_features, min(self.order, d), wdist, bdist, self.activation,
            seed=self.random_state,
        )
        self.n_features_in_ = d
        return self

    def transform(self, X):
        check_is_fitted(self, "feature_map_")
        return evaluate_features(self.feature_map_, X)
