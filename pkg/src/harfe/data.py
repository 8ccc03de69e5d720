"""Dataset container, CSV ingestion, standardisation, splitting and error metrics.

Arrays follow the scikit-learn layout: ``X`` has one sample per row.
"""

import csv
import hashlib
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import check_matrix, check_vector
from .exceptions import DataParseError, EmptyDatasetError, InvalidSizeError, ShapeError, ZeroNormError

__all__ = [
    "Dataset",
    "Normalizer",
    "fingerprint",
    "load_csv",
    "read_feature_matrix",
    "mse",
    "rel_error",
    "save_csv",
    "split",
]


def fingerprint(X, y=None):
    """Short SHA-256 digest of the raw array bytes."""
    h = hashlib.sha256()
    X = np.ascontiguousarray(X, dtype=np.float64)
    h.update(str(X.shape).encode())
    h.update(X.tobytes())
    if y is not None:
        h.update(np.ascontiguousarray(y, dtype=np.float64).tobytes())
    return h.hexdigest()[:16]


@dataclass(eq=False)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: list | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = check_matrix(self.X, "X")
        self.y = check_vector(self.y, "y", length=self.X.shape[0])
        if self.feature_names is not None and len(self.feature_names) != self.X.shape[1]:
            raise ShapeError("feature_names must have one entry per column of X")

    @property
    def n_samples(self):
        return self.X.shape[0]

    @property
    def n_dims(self):
        return self.X.shape[1]

    def fingerprint(self):
        return fingerprint(self.X, self.y)

    def subset(self, rows, **provenance):
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(self.X[rows], self.y[rows], self.feature_names,
                       {**self.provenance, **provenance})


def _parse_field(text, row, col):
    try:
        value = float(text)
    except ValueError:
        raise DataParseError(f"row {row}, column {col}: cannot parse {text!r} as a number",
                             row=row, column=col) from None
    if not math.isfinite(value):
        raise DataParseError(f"row {row}, column {col}: non-finite value {text!r}",
                             row=row, column=col)
    return value


def _read_rows(path, has_header, delimiter):
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh, delimiter=delimiter))
    header = None
    start = 0
    if has_header:
        if not rows:
            raise EmptyDatasetError(f"{path}: file is empty")
        header = [h.strip() for h in rows[0]]
        start = 1
    body = [(i + 1, r) for i, r in enumerate(rows) if i >= start and any(cell.strip() for cell in r)]
    if not body:
        raise EmptyDatasetError(f"{path}: no data rows")
    width = len(header) if header is not None else len(body[0][1])
    values = np.empty((len(body), width))
    for k, (lineno, record) in enumerate(body):
        if len(record) != width:
            raise DataParseError(f"row {lineno}: expected {width} fields, found {len(record)}",
                                 row=lineno)
        for col, text in enumerate(record):
            values[k, col] = _parse_field(text.strip(), lineno, col)
    return header, values


def load_csv(path, has_header=True, target_column=-1, delimiter=","):
    """Read a numeric CSV file into a :class:`Dataset`.

    Parameters
    ----------
    path : str or Path
    has_header : bool, default=True
    target_column : int or str, default=-1
        Position (negative counts from the end) or header name of the target.
    delimiter : str, default=","

    Raises
    ------
    DataParseError
        A field is not a finite number or a row has the wrong width.  ``row``
        is the 1-based physical line number.
    EmptyDatasetError
        No data rows.
    """
    header, values = _read_rows(path, has_header, delimiter)
    width = values.shape[1]
    if width < 2:
        raise DataParseError(f"{path}: need at least one feature column and a target column")
    if isinstance(target_column, str):
        if header is None:
            raise ValueError("target_column given by name requires has_header=True")
        if target_column not in header:
            raise KeyError(f"target column {target_column!r} not in header {header}")
        target = header.index(target_column)
    else:
        target = int(target_column)
        if not -width <= target < width:
            raise IndexError(f"target_column {target_column} out of range for {width} columns")
        target %= width
    keep = [c for c in range(width) if c != target]
    names = [header[c] for c in keep] if header is not None else None
    return Dataset(values[:, keep], values[:, target], names,
                   {"source": str(path), "target_column": target})


def read_feature_matrix(path, has_header=True, delimiter=","):
    """Read a CSV holding only input columns; returns an ``(m, d)`` array."""
    return _read_rows(path, has_header, delimiter)[1]


def save_csv(dataset, path, target_name="y"):
    """Write ``dataset`` as CSV with a header row; the target is the last column."""
    names = dataset.feature_names or [f"x{i + 1}" for i in range(dataset.n_dims)]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([*names, target_name])
        for xrow, yval in zip(dataset.X, dataset.y):
            writer.writerow([repr(float(v)) for v in xrow] + [repr(float(yval))])


@dataclass(frozen=True, eq=False)
class Normalizer:
    """Per-dimension standardisation fitted on training data only.

    Standard deviations use the population (``1/m``) convention so the
    transformed training columns have unit variance exactly.  Constant columns
    get ``std = 1`` and are listed in ``constant_columns``.
    """

    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float = 0.0
    y_std: float = 1.0
    constant_columns: tuple = ()
    constant_target: bool = False
    fitted_on: str = ""

    @classmethod
    def fit(cls, X, y=None):
        X = check_matrix(X)
        if X.shape[0] < 2:
            raise InvalidSizeError("need at least 2 samples to fit a normalizer")
        x_mean = X.mean(axis=0)
        x_std = X.std(axis=0)
        constant = tuple(int(i) for i in np.flatnonzero(x_std == 0))
        if constant:
            warnings.warn(f"constant input columns {list(constant)} left unscaled", stacklevel=2)
            x_std = np.where(x_std == 0, 1.0, x_std)
        y_mean, y_std, constant_target = 0.0, 1.0, False
        if y is not None:
            y = check_vector(y, length=X.shape[0])
            y_mean, y_std = float(y.mean()), float(y.std())
            if y_std == 0:
                warnings.warn("constant target left unscaled", stacklevel=2)
                y_std, constant_target = 1.0, True
        return cls(x_mean, x_std, y_mean, y_std, constant, constant_target, fingerprint(X, y))

    @classmethod
    def fit_dataset(cls, dataset):
        return cls.fit(dataset.X, dataset.y)

    def transform_X(self, X):
        return (check_matrix(X) - self.x_mean) / self.x_std

    def inverse_transform_X(self, Z):
        return np.asarray(Z) * self.x_std + self.x_mean

    def transform_y(self, y):
        return (np.asarray(y, dtype=np.float64) - self.y_mean) / self.y_std

    def inverse_transform_y(self, z):
        return np.asarray(z) * self.y_std + self.y_mean

    def transform(self, dataset):
        return Dataset(self.transform_X(dataset.X), self.transform_y(dataset.y),
                       dataset.feature_names, {**dataset.provenance, "normalized_with": self.fitted_on})

    def to_dict(self):
        return {
            "x_mean": self.x_mean.tolist(),
            "x_std": self.x_std.tolist(),
            "y_mean": self.y_mean,
            "y_std": self.y_std,
            "constant_columns": list(self.constant_columns),
            "constant_target": self.constant_target,
            "fitted_on": self.fitted_on,
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(
            np.asarray(doc["x_mean"], dtype=np.float64),
            np.asarray(doc["x_std"], dtype=np.float64),
            float(doc["y_mean"]),
            float(doc["y_std"]),
            tuple(doc.get("constant_columns", ())),
            bool(doc.get("constant_target", False)),
            doc.get("fitted_on", ""),
        )


def split(dataset, fraction=0.5, counts=None, seed=0):
    """Shuffle and split into ``(train, test)``.

    With ``counts=(n_train, n_test)`` exactly those sizes are drawn and any
    remaining rows are dropped.  Otherwise ``ceil(fraction * m)`` rows go to
    training and the rest to testing, so an odd half-split gives training the
    extra row.
    """
    m = dataset.n_samples
    if counts is not None:
        n_train, n_test = (int(c) for c in counts)
        if n_train < 1 or n_test < 1:
            raise InvalidSizeError("split counts must be positive")
        if n_train + n_test > m:
            raise InvalidSizeError(f"split counts {n_train}+{n_test} exceed {m} samples")
    else:
        if not 0 < fraction < 1:
            raise InvalidSizeError(f"fraction must lie in (0, 1), got {fraction}")
        n_train = math.ceil(fraction * m)
        n_test = m - n_train
        if n_train < 1 or n_test < 1:
            raise InvalidSizeError(f"cannot split {m} samples with fraction {fraction}")
    rng = np.random.Generator(np.random.Philox(seed))
    order = rng.permutation(m)
    info = {"split_seed": seed, "n_total": m, "n_unused": m - n_train - n_test}
    train = dataset.subset(order[:n_train], split="train", **info)
    test = dataset.subset(order[n_train:n_train + n_test], split="test", **info)
    return train, test


def mse(y_true, y_pred):
    """Mean of ``|y_true - y_pred|**2``."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ShapeError(f"shapes differ: {y_true.shape} vs {y_pred.shape}")
    return float(np.mean(np.abs(y_true - y_pred) ** 2))


def rel_error(y_true, y_pred):
    """``||y_true - y_pred||_2 / ||y_true||_2``."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ShapeError(f"shapes differ: {y_true.shape} vs {y_pred.shape}")
    denom = np.sum(np.abs(y_true) ** 2)
    if denom == 0:
        raise ZeroNormError("relative error undefined for an all-zero reference")
    return float(np.sqrt(np.sum(np.abs(y_true - y_pred) ** 2) / denom))
