"""Benchmark target functions and seeded synthetic datasets."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._validation import check_matrix, check_seed
from .data import Dataset
from .exceptions import InvalidSizeError, ShapeError

__all__ = [
    "SyntheticSpec",
    "TARGETS",
    "TargetFunction",
    "evaluate_target",
    "generate_dataset",
    "get_target",
]


def _inv_sqrt_norm(X):
    return 1.0 / np.sqrt(1.0 + np.sum(X**2, axis=1))


def _sqrt_norm(X):
    return np.sqrt(1.0 + np.sum(X**2, axis=1))


def _rational_prod(X):
    return X[:, 0] * X[:, 1] / (1.0 + X[:, 2] ** 6)


def _sum_exp_abs(X):
    return np.sum(np.exp(-np.abs(X)), axis=1)


def _friedman1(X):
    return (10 * np.sin(np.pi * X[:, 0] * X[:, 1]) + 20 * (X[:, 2] - 0.5) ** 2
            + 10 * X[:, 3] + 5 * X[:, 4])


def _friedman_inner(X):
    # unit-cube inputs rescaled to the classical ranges:
    # x2 -> [40pi, 560pi], x4 -> [1, 11]
    x2 = 520 * np.pi * X[:, 1] + 40 * np.pi
    x4 = 10 * X[:, 3] + 1
    return X[:, 2] * x2 - 1.0 / (x2 * x4)


def _friedman2(X):
    return np.sqrt((100 * X[:, 0]) ** 2 + _friedman_inner(X) ** 2)


def _friedman3(X):
    num = _friedman_inner(X)
    den = 100 * X[:, 0]
    out = np.empty_like(num)
    nz = den != 0
    out[nz] = np.arctan(num[nz] / den[nz])
    # x1 == 0: the quotient's limit is +-inf depending on the numerator
    out[~nz] = np.sign(num[~nz]) * (np.pi / 2)
    return out


@dataclass(frozen=True)
class TargetFunction:
    """Named closed-form target.

    ``fixed_dim`` is set for functions with a fixed input dimension;
    ``min_dim`` bounds the free-dimension ones.
    """

    name: str
    fn: Callable
    fixed_dim: int | None = None
    min_dim: int = 1
    default_dim: int = 5
    input_range: tuple = (-1.0, 1.0)

    def dimension(self, d=None):
        if self.fixed_dim is not None:
            if d is not None and d != self.fixed_dim:
                raise ShapeError(f"{self.name} is defined only for d={self.fixed_dim}, got d={d}")
            return self.fixed_dim
        d = self.default_dim if d is None else int(d)
        if d < self.min_dim:
            raise ShapeError(f"{self.name} needs d >= {self.min_dim}, got d={d}")
        return d

    def __call__(self, X):
        return evaluate_target(self, X)


TARGETS = {
    "inv_sqrt_norm": TargetFunction("inv_sqrt_norm", _inv_sqrt_norm),
    "sqrt_norm": TargetFunction("sqrt_norm", _sqrt_norm),
    "rational_prod": TargetFunction("rational_prod", _rational_prod, min_dim=3),
    "sum_exp_abs": TargetFunction("sum_exp_abs", _sum_exp_abs, default_dim=100),
    "friedman1": TargetFunction("friedman1", _friedman1, fixed_dim=10, input_range=(0.0, 1.0)),
    "friedman2": TargetFunction("friedman2", _friedman2, fixed_dim=4, input_range=(0.0, 1.0)),
    "friedman3": TargetFunction("friedman3", _friedman3, fixed_dim=4, input_range=(0.0, 1.0)),
    "friedman_g20": TargetFunction("friedman_g20", _friedman1, fixed_dim=20, input_range=(0.0, 1.0)),
}


def get_target(name):
    try:
        return TARGETS[name]
    except KeyError:
        raise KeyError(f"unknown target {name!r}; choose from {sorted(TARGETS)}") from None


def evaluate_target(target, X):
    """Evaluate a target on the rows of ``X`` (a single point may be 1-D)."""
    if isinstance(target, str):
        target = get_target(target)
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    X = check_matrix(X[None, :] if single else X)
    if target.fixed_dim is not None and X.shape[1] != target.fixed_dim:
        raise ShapeError(f"{target.name} expects d={target.fixed_dim}, got {X.shape[1]}")
    if X.shape[1] < target.min_dim:
        raise ShapeError(f"{target.name} needs d >= {target.min_dim}, got {X.shape[1]}")
    out = target.fn(X)
    return float(out[0]) if single else out


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a train/test pair.

    ``input_distribution`` is ``("uniform", low, high)`` or ``("gaussian", gamma)``;
    ``None`` uses the target's customary cube.  ``noise_sigma`` is the standard
    deviation of the Gaussian noise added to training targets only.
    """

    target: str
    d: int | None = None
    m_train: int = 500
    m_test: int = 500
    input_distribution: tuple | None = None
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        get_target(self.target)
        if self.m_train < 1 or self.m_test < 1:
            raise InvalidSizeError("m_train and m_test must be positive")
        if not self.noise_sigma >= 0:
            raise ValueError("noise_sigma must be nonnegative")
        check_seed(self.seed)

    def resolved_input_distribution(self):
        if self.input_distribution is None:
            low, high = get_target(self.target).input_range
            return ("uniform", low, high)
        kind = self.input_distribution[0]
        if kind == "uniform" and len(self.input_distribution) == 3:
            return tuple(self.input_distribution)
        if kind == "gaussian" and len(self.input_distribution) == 2:
            return tuple(self.input_distribution)
        raise ValueError(f"bad input distribution {self.input_distribution!r}")

    def to_dict(self):
        return {
            "target": self.target,
            "d": get_target(self.target).dimension(self.d),
            "m_train": self.m_train,
            "m_test": self.m_test,
            "input_distribution": list(self.resolved_input_distribution()),
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
        }


def _stream(seed, index):
    return np.random.Generator(np.random.Philox(key=np.array([seed, index], dtype=np.uint64)))


def _draw_inputs(rng, dist, m, d):
    if dist[0] == "uniform":
        return rng.uniform(dist[1], dist[2], (m, d))
    return rng.normal(0.0, dist[1], (m, d))


def generate_dataset(spec):
    """Draw ``(train, test)`` datasets for ``spec``.

    Training targets carry the configured noise; test targets are the exact
    function values.  Train and test use independent Philox streams keyed by
    ``(seed, 0)`` and ``(seed, 1)``.
    """
    target = get_target(spec.target)
    d = target.dimension(spec.d)
    dist = spec.resolved_input_distribution()
    provenance = {"synthetic": spec.to_dict()}

    rng = _stream(spec.seed, 0)
    X_train = _draw_inputs(rng, dist, spec.m_train, d)
    y_train = target.fn(X_train)
    if spec.noise_sigma > 0:
        y_train = y_train + rng.normal(0.0, spec.noise_sigma, spec.m_train)

    rng = _stream(spec.seed, 1)
    X_test = _draw_inputs(rng, dist, spec.m_test, d)
    y_test = target.fn(X_test)

    train = Dataset(X_train, y_train, None, {**provenance, "split": "train"})
    test = Dataset(X_test, y_test, None, {**provenance, "split": "test"})
    return train, test
