"""Compressive-sensing diagnostics at small scale.

Everything here is exact: restricted isometry constants are computed by
enumerating every support, never by sampling.
"""

import json
from dataclasses import asdict, dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from ._validation import check_matrix
from .exceptions import BudgetExceededError, InvalidSparsityError, TraceTooShortError
from .solver import FitReport

__all__ = [
    "ConvergenceFit",
    "DiagnosticsReport",
    "RipEstimate",
    "coherence",
    "convergence_fit",
    "fit_geometric_decay",
    "kappa_1s",
    "rip_constant_bruteforce",
]

DEFAULT_SUBSET_BUDGET = 200_000
_CHUNK = 4096


def kappa_1s(c, s):
    """l1 distance from ``c`` to its best ``s``-term approximation."""
    mags = np.abs(np.asarray(c).ravel())
    n = mags.size
    if isinstance(s, bool) or int(s) != s or not 0 <= s <= n:
        raise InvalidSparsityError(f"s must satisfy 0 <= s <= {n}, got {s!r}")
    if s == n:
        return 0.0
    tail = np.partition(mags, n - int(s) - 1)[: n - int(s)] if s else mags
    return float(np.sum(tail))


def _subset_blocks(n, s):
    it = combinations(range(n), s)
    while True:
        block = np.fromiter((i for sub in _take(it, _CHUNK) for i in sub), dtype=np.int64)
        if block.size == 0:
            return
        yield block.reshape(-1, s)


def _take(it, k):
    for _, item in zip(range(k), it):
        yield item


def rip_constant_bruteforce(A, s, budget=DEFAULT_SUBSET_BUDGET):
    """Exact restricted isometry constant ``delta_s`` of ``A``.

    Returns ``max_S ||A_S^H A_S - I||_2`` over all supports of size ``s``.
    Columns are used as given (no normalisation).

    Raises
    ------
    BudgetExceededError
        If ``C(N, s)`` exceeds ``budget``.
    """
    A = check_matrix(A, "A", allow_complex=True)
    n = A.shape[1]
    if isinstance(s, bool) or int(s) != s or not 1 <= s <= n:
        raise InvalidSparsityError(f"s must satisfy 1 <= s <= {n}, got {s!r}")
    n_subsets = comb(n, int(s))
    if n_subsets > budget:
        raise BudgetExceededError(
            f"C({n}, {s}) = {n_subsets} supports exceeds the budget of {budget}"
        )
    G = A.conj().T @ A
    delta = 0.0
    for block in _subset_blocks(n, int(s)):
        sub = G[block[:, :, None], block[:, None, :]]
        eig = np.linalg.eigvalsh(sub)
        delta = max(delta, float(np.max(np.maximum(eig[:, -1] - 1.0, 1.0 - eig[:, 0]))))
    return delta


def coherence(A):
    """Mutual coherence ``max_{i != j} |<a_i, a_j>| / (||a_i|| ||a_j||)``."""
    A = check_matrix(A, "A", allow_complex=True)
    if A.shape[1] < 2:
        raise ValueError("coherence needs at least two columns")
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise ValueError("coherence is undefined for zero columns")
    An = A / norms
    G = np.abs(An.conj().T @ An)
    np.fill_diagonal(G, 0.0)
    return float(min(G.max(), 1.0))


@dataclass(frozen=True)
class ConvergenceFit:
    """Least-squares fit of ``log e_n = log C + n log beta`` before the error floor."""

    beta_hat: float | None
    floor: float | None
    n_points: int
    r_squared: float | None


def fit_geometric_decay(errors, plateau_ratio=2.0, floor_margin=10.0):
    """Fit a geometric rate to an error sequence ``e_0, e_1, ...``.

    A floor is declared when the last three errors agree to within
    ``plateau_ratio``.  Only the points up to the first one within
    ``floor_margin`` of the floor enter the fit.  ``beta_hat`` is ``None``
    when fewer than two points remain.
    """
    e = np.asarray(errors, dtype=np.float64)
    if e.size < 5:
        raise TraceTooShortError(f"need at least 5 errors, got {e.size}")
    e = np.maximum(e, np.finfo(np.float64).tiny)
    tail = e[-3:]
    floor = None
    used = e
    if tail.max() <= plateau_ratio * tail.min():
        floor = float(np.median(tail))
        cutoff = int(np.argmax(e <= floor_margin * floor))
        used = e[: cutoff + 1]
    if used.size < 2:
        return ConvergenceFit(None, floor, int(used.size), None)
    n = np.arange(used.size, dtype=np.float64)
    logs = np.log(used)
    slope, intercept = np.polyfit(n, logs, 1)
    resid = logs - (slope * n + intercept)
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return ConvergenceFit(float(np.exp(slope)), floor, int(used.size), r2)


def convergence_fit(report, c_star=None, **kwargs):
    """Geometric-rate fit for a :class:`FitReport`.

    With ``c_star`` the errors are ``||c^n - c_star||`` (the report must have
    been recorded with ``record_iterates=True``; ``c^0 = 0``).  Without it the
    relative residual trace is used, starting from 1 at ``c^0 = 0``.
    """
    if not isinstance(report, FitReport):
        raise TypeError("report must be a FitReport")
    if report.iterations_run < 5:
        raise TraceTooShortError(f"need at least 5 iterations, got {report.iterations_run}")
    if c_star is None:
        errors = [1.0, *report.relative_residual_trace]
    else:
        if report.coefficient_trace is None:
            raise ValueError("report has no coefficient trace; fit with record_iterates=True")
        c_star = np.asarray(c_star)
        errors = [np.linalg.norm(c_star)] + [np.linalg.norm(c - c_star) for c in report.coefficient_trace]
    return fit_geometric_decay(errors, **kwargs)


@dataclass(frozen=True)
class RipEstimate:
    s: int
    delta_s: float
    method: str = "exhaustive"


@dataclass
class DiagnosticsReport:
    kappa: dict = field(default_factory=dict)
    coherence: float | None = None
    rip: list = field(default_factory=list)
    convergence: ConvergenceFit | None = None
    notes: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "kappa": {str(k): v for k, v in self.kappa.items()},
            "coherence": self.coherence,
            "rip": [asdict(r) for r in self.rip],
            "convergence": None if self.convergence is None else asdict(self.convergence),
            "notes": self.notes,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)
