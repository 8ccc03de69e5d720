"""Hard-thresholding pursuit for sparse ridge regression.

Solves ``min ||A c - y||^2 + m*lam*||c||^2`` over ``s``-sparse ``c`` by alternating

1. a shrunken gradient step ``(1 - m*mu*lam) c + mu * A^H (y - A c)``,
2. keeping the ``s`` largest-magnitude entries,
3. an exact ridge solve restricted to those entries.

The step in (1) equals the plain gradient step on the stacked system
``B = [A; sqrt(m*lam) I]``, ``y~ = [y; 0]`` without materialising ``B``.
Works for real and complex feature matrices.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from ._validation import check_matrix, check_vector
from .exceptions import IllConditionedSolveError, InvalidSparsityError, ShapeError

__all__ = [
    "FitReport",
    "SolverConfig",
    "SparseCoefficients",
    "gradient_step",
    "harfe_fit",
    "hard_threshold",
    "normal_equation_residual",
    "relative_residual",
    "ridge_restricted_solve",
]

# least-squares path refuses systems whose condition number exceeds this
_LSTSQ_COND_LIMIT = 1e12


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters for :func:`harfe_fit`.

    The ridge penalty is ``m * lam * ||c||^2`` with ``m`` the number of rows of
    ``A``.  Pass ``m_lambda`` instead of ``lam`` to give the product directly;
    when both are set ``m_lambda`` wins.
    """

    s: int
    mu: float = 0.1
    lam: float = 0.0
    m_lambda: float | None = None
    epsilon: float = 0.0
    max_iter: int = 50
    support_stability_stop: bool = False
    record_iterates: bool = False

    def __post_init__(self):
        if isinstance(self.s, bool) or int(self.s) != self.s or self.s < 1:
            raise InvalidSparsityError(f"s must be a positive integer, got {self.s!r}")
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.lam >= 0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")
        if self.m_lambda is not None and not self.m_lambda >= 0:
            raise ValueError(f"m_lambda must be nonnegative, got {self.m_lambda}")
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")
        if isinstance(self.max_iter, bool) or int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter!r}")

    def penalty(self, m):
        """Return ``(lam, m*lam)`` for a system with ``m`` rows."""
        if self.m_lambda is not None:
            return self.m_lambda / m, float(self.m_lambda)
        return float(self.lam), m * float(self.lam)


@dataclass(frozen=True, eq=False)
class SparseCoefficients:
    """Dense coefficient vector together with its exact nonzero set."""

    values: np.ndarray
    support: np.ndarray

    @classmethod
    def from_dense(cls, values):
        values = np.array(values)
        values.flags.writeable = False
        support = np.flatnonzero(values)
        support.flags.writeable = False
        return cls(values, support)

    @classmethod
    def zeros(cls, n, dtype=np.float64):
        return cls.from_dense(np.zeros(n, dtype=dtype))

    @property
    def n_features(self):
        return self.values.shape[0]

    @property
    def is_complex(self):
        return np.iscomplexobj(self.values)

    def __len__(self):
        return self.n_features


@dataclass
class FitReport:
    iterations_run: int = 0
    relative_residual_trace: list = field(default_factory=list)
    support_trace: list = field(default_factory=list)
    converged: bool = False
    stop_reason: str = ""
    wall_time: dict = field(default_factory=lambda: {"gradient": 0.0, "threshold": 0.0, "solve": 0.0})
    lam: float = 0.0
    m_lambda: float = 0.0
    jitter_m_lambda: float | None = None
    coefficient_trace: list | None = None

    @property
    def final_relative_residual(self):
        return self.relative_residual_trace[-1] if self.relative_residual_trace else 1.0

    def summary(self, include_timing=True):
        """JSON-friendly digest without the per-iteration supports.

        ``include_timing=False`` drops the wall-clock entries so the digest is
        reproducible byte for byte.
        """
        doc = {
            "iterations_run": self.iterations_run,
            "converged": self.converged,
            "stop_reason": self.stop_reason,
            "final_relative_residual": self.final_relative_residual,
            "relative_residual_trace": list(self.relative_residual_trace),
            "wall_time": dict(self.wall_time),
            "lambda": self.lam,
            "m_lambda": self.m_lambda,
            "jitter_m_lambda": self.jitter_m_lambda,
        }
        if not include_timing:
            del doc["wall_time"]
        return doc


def _adjoint_apply(A, r):
    # A^H r without copying A
    if np.iscomplexobj(A):
        return (r.conj() @ A).conj()
    return A.T @ r


def relative_residual(A, y, coef):
    """``||A c - y||_2 / ||y||_2``."""
    values = coef.values if isinstance(coef, SparseCoefficients) else np.asarray(coef)
    return float(np.linalg.norm(A @ values - y) / np.linalg.norm(y))


def gradient_step(c, A, y, mu, lam, m=None):
    """Shrunken gradient step ``(1 - m*mu*lam) c + mu * A^H (y - A c)``.

    ``m`` defaults to the number of rows of ``A``.
    """
    A = check_matrix(A, "A", allow_complex=True)
    y = check_vector(y, "y", allow_complex=True, length=A.shape[0])
    c = np.asarray(c.values if isinstance(c, SparseCoefficients) else c)
    if c.shape != (A.shape[1],):
        raise ShapeError(f"c has shape {c.shape}, expected ({A.shape[1]},)")
    if m is None:
        m = A.shape[0]
    elif m != A.shape[0]:
        raise ShapeError(f"m={m} does not match the {A.shape[0]} rows of A")
    return (1.0 - m * mu * lam) * c + mu * _adjoint_apply(A, y - A @ c)


def hard_threshold(v, s):
    """Indices of the ``s`` largest-magnitude entries of ``v``, sorted ascending.

    Among equal magnitudes the smaller index is kept.
    """
    v = np.asarray(v)
    n = v.shape[0]
    if isinstance(s, bool) or int(s) != s or not 1 <= s <= n:
        raise InvalidSparsityError(f"s must satisfy 1 <= s <= {n}, got {s!r}")
    # stable sort keeps index order within ties
    order = np.argsort(-np.abs(v), kind="stable")
    return np.sort(order[: int(s)])


def normal_equation_residual(A, y, coef, m_lambda):
    """Relative residual of ``(A_S^H A_S + m*lam I) c_S = A_S^H y`` on the support of ``coef``."""
    values = coef.values if isinstance(coef, SparseCoefficients) else np.asarray(coef)
    support = np.flatnonzero(values)
    if support.size == 0:
        return 0.0
    Abar = A[:, support]
    rhs = _adjoint_apply(Abar, y)
    lhs = _adjoint_apply(Abar, Abar @ values[support]) + m_lambda * values[support]
    denom = np.linalg.norm(rhs)
    return float(np.linalg.norm(lhs - rhs) / denom) if denom > 0 else float(np.linalg.norm(lhs))


def _gram(Abar):
    return Abar.conj().T @ Abar


def _solve_spd(G, rhs, m_lambda):
    K = G + m_lambda * np.eye(G.shape[0])
    try:
        factor = linalg.cho_factor(K, lower=False, check_finite=False)
    except linalg.LinAlgError as exc:
        raise IllConditionedSolveError(
            f"restricted ridge system is not numerically positive definite (m*lam={m_lambda:g})",
            condition_estimate=float(np.linalg.cond(K)),
        ) from exc
    x = linalg.cho_solve(factor, rhs, check_finite=False)
    # one step of iterative refinement
    x += linalg.cho_solve(factor, rhs - K @ x, check_finite=False)
    return x


def _solve_lstsq(Abar, y):
    Q, R = linalg.qr(Abar, mode="economic", check_finite=False)
    cond = float(np.linalg.cond(R)) if R.size else np.inf
    if Abar.shape[0] < Abar.shape[1] or not np.isfinite(cond) or cond > _LSTSQ_COND_LIMIT:
        raise IllConditionedSolveError(
            f"unregularized restricted least squares is ill-conditioned (cond ~ {cond:.3g})",
            condition_estimate=cond,
        )
    return linalg.solve_triangular(R, Q.conj().T @ y, check_finite=False)


def ridge_restricted_solve(A, y, support, m_lambda):
    """Solve the ridge problem on the columns ``support`` of ``A``.

    Returns ``c`` with ``c[support] = (A_S^H A_S + m_lambda I)^{-1} A_S^H y`` and
    zeros elsewhere.  ``m_lambda > 0`` uses a Cholesky factorisation of the
    ``|S| x |S|`` Gram system; ``m_lambda == 0`` uses a QR factorisation of
    ``A_S`` and raises :class:`IllConditionedSolveError` when ``A_S`` is
    (numerically) rank deficient.
    """
    support = np.asarray(support, dtype=np.int64)
    if support.ndim != 1 or support.size < 1:
        raise ValueError("support must be a nonempty 1-D index set")
    if not m_lambda >= 0:
        raise ValueError(f"m_lambda must be nonnegative, got {m_lambda}")
    Abar = A[:, support]
    if m_lambda > 0:
        x = _solve_spd(_gram(Abar), _adjoint_apply(Abar, y), m_lambda)
    else:
        x = _solve_lstsq(Abar, y)
    dtype = np.result_type(A.dtype, y.dtype, np.float64)
    values = np.zeros(A.shape[1], dtype=dtype)
    values[support] = x
    return SparseCoefficients.from_dense(values)


def harfe_fit(A, y, config):
    """Fit ``s``-sparse ridge coefficients by hard-thresholding pursuit.

    Parameters
    ----------
    A : ndarray of shape (m, N)
        Feature matrix, real or complex.
    y : ndarray of shape (m,)
    config : SolverConfig

    Returns
    -------
    coef : SparseCoefficients
    report : FitReport

    Notes
    -----
    Starts from ``c = 0`` and iterates until the relative residual
    ``||A c - y|| / ||y||`` drops to ``config.epsilon`` or ``config.max_iter``
    iterations have run (or, if enabled, the support stops changing).  If a
    restricted solve fails it is retried once with
    ``m*lam = max(m*lam, 1e-12 * trace(A_S^H A_S) / s)``.
    """
    A = check_matrix(A, "A", allow_complex=True)
    y = check_vector(y, "y", allow_complex=True, length=A.shape[0])
    m, n = A.shape
    if config.s > n:
        raise InvalidSparsityError(f"s={config.s} exceeds the number of features N={n}")
    lam, m_lambda = config.penalty(m)
    report = FitReport(lam=lam, m_lambda=m_lambda)
    if config.record_iterates:
        report.coefficient_trace = []
    dtype = np.result_type(A.dtype, y.dtype, np.float64)

    y_norm = np.linalg.norm(y)
    if y_norm == 0:
        report.converged = True
        report.stop_reason = "zero_target"
        return SparseCoefficients.zeros(n, dtype), report

    c = np.zeros(n, dtype=dtype)
    support = np.empty(0, dtype=np.int64)
    residual = y.astype(dtype)
    rel = 1.0
    shrink = 1.0 - config.mu * m_lambda
    while rel > config.epsilon and report.iterations_run < config.max_iter:
        t0 = time.perf_counter()
        v = shrink * c + config.mu * _adjoint_apply(A, residual)
        t1 = time.perf_counter()
        new_support = hard_threshold(v, config.s)
        t2 = time.perf_counter()
        try:
            coef = ridge_restricted_solve(A, y, new_support, m_lambda)
        except IllConditionedSolveError:
            G_trace = float(np.sum(np.abs(A[:, new_support]) ** 2))
            jitter = max(m_lambda, 1e-12 * G_trace / config.s)
            report.jitter_m_lambda = jitter
            coef = ridge_restricted_solve(A, y, new_support, jitter)
        t3 = time.perf_counter()
        report.wall_time["gradient"] += t1 - t0
        report.wall_time["threshold"] += t2 - t1
        report.wall_time["solve"] += t3 - t2

        stable = np.array_equal(new_support, support)
        c = np.array(coef.values)
        support = new_support
        residual = y - A[:, support] @ c[support]
        rel = float(np.linalg.norm(residual) / y_norm)

        report.iterations_run += 1
        report.relative_residual_trace.append(rel)
        report.support_trace.append(tuple(int(i) for i in support))
        if config.record_iterates:
            report.coefficient_trace.append(c.copy())
        if config.support_stability_stop and stable:
            report.stop_reason = "support_stable"
            break

    if rel <= config.epsilon:
        report.converged = True
        report.stop_reason = "residual"
    elif report.stop_reason == "support_stable":
        report.converged = True
    else:
        report.stop_reason = "max_iter"
    return SparseCoefficients.from_dense(c), report
