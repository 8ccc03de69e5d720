from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from harfe.diagnostics import (coherence, convergence_fit, fit_geometric_decay, kappa_1s,
                               rip_constant_bruteforce)
from harfe.exceptions import BudgetExceededError, TraceTooShortError
from harfe.experiments import planted_instance
from harfe.features import WeightDistribution, evaluate_features, sample_feature_map
from harfe.solver import SolverConfig, harfe_fit


def kappa_oracle(c, s):
    mags = sorted((abs(x) for x in c), reverse=True)
    return sum(mags[s:])


def rip_oracle(A, s):
    worst = 0.0
    for S in combinations(range(A.shape[1]), s):
        sub = A[:, S]
        eig = np.linalg.eigvalsh(sub.conj().T @ sub)
        worst = max(worst, abs(eig[0] - 1), abs(eig[-1] - 1))
    return worst


def coherence_oracle(A):
    best = 0.0
    for i in range(A.shape[1]):
        for j in range(A.shape[1]):
            if i != j:
                a, b = A[:, i], A[:, j]
                best = max(best, abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b)))
    return best


def test_kappa_examples():
    c = np.array([3, 1, -2, 0.5])
    assert kappa_1s(c, 2) == 1.5
    assert kappa_1s(c, 4) == 0
    assert kappa_1s(c, 0) == 6.5


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(1, 30), elements=st.floats(-1e3, 1e3)))
def test_kappa_matches_sort_oracle_and_is_monotone(c):
    values = [kappa_1s(c, s) for s in range(c.size + 1)]
    for s, v in enumerate(values):
        assert v == pytest.approx(kappa_oracle(c, s), rel=1e-12, abs=1e-9)
    assert all(a >= b for a, b in zip(values, values[1:]))
    for s in range(c.size + 1):
        assert (values[s] == 0) == (np.count_nonzero(c) <= s)


def test_rip_trivial_cases():
    Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((8, 5)))
    for s in range(1, 6):
        assert rip_constant_bruteforce(Q, s) < 1e-14
    e1 = np.array([[1.0], [0.0]])
    assert rip_constant_bruteforce(np.hstack([e1, e1]), 2) == pytest.approx(1.0)


def test_rip_matches_per_subset_oracle():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((30, 10)) / np.sqrt(30)
    for s in (1, 2, 3):
        assert abs(rip_constant_bruteforce(A, s) - rip_oracle(A, s)) <= 1e-10
    Z = (rng.standard_normal((20, 7)) + 1j * rng.standard_normal((20, 7))) / np.sqrt(40)
    assert abs(rip_constant_bruteforce(Z, 2) - rip_oracle(Z, 2)) <= 1e-10


def test_rip_monotone_in_s():
    A = np.random.default_rng(6).standard_normal((25, 12)) / 5
    deltas = [rip_constant_bruteforce(A, s) for s in range(1, 6)]
    assert all(a <= b + 1e-15 for a, b in zip(deltas, deltas[1:]))


def test_rip_budget_refusal():
    with pytest.raises(BudgetExceededError):
        rip_constant_bruteforce(np.ones((3, 40)), 10, budget=1000)


def test_rip_shrinks_with_more_samples():
    # wide weights keep the population Gram close to the identity, so the
    # remaining deviation is sampling error and should fall with m
    medians = []
    for m in (50, 200, 800):
        deltas = []
        for trial in range(20):
            X = np.random.default_rng(1000 * m + trial).normal(size=(m, 5))
            fmap = sample_feature_map(5, 12, 5, WeightDistribution("gaussian", 3.0), activation="complex_exp",
                                      seed=trial)
            deltas.append(rip_constant_bruteforce(evaluate_features(fmap, X) / np.sqrt(m), 2))
        medians.append(np.median(deltas))
    assert medians[0] > medians[1] > medians[2]
    # roughly the 1/sqrt(m) sampling rate
    assert medians[2] < 0.7 * medians[1] < 0.49 * medians[0]


def test_coherence():
    assert coherence(np.eye(4)) == 0
    a = np.array([1.0, 2.0, -1.0])
    assert coherence(np.column_stack([a, a, [0, 0, 1.0]])) == pytest.approx(1.0)
    rng = np.random.default_rng(3)
    for A in (rng.standard_normal((15, 8)), rng.standard_normal((10, 6)) + 1j * rng.standard_normal((10, 6))):
        assert abs(coherence(A) - coherence_oracle(A)) <= 1e-12


def test_geometric_decay_fit():
    fit = fit_geometric_decay(0.5 ** np.arange(30))
    assert fit.beta_hat == pytest.approx(0.5, abs=1e-6) and fit.floor is None
    flat = fit_geometric_decay(np.full(10, 3.0))
    assert flat.floor == 3.0 and flat.beta_hat is None
    with pytest.raises(TraceTooShortError):
        fit_geometric_decay([1, 0.5, 0.25])


def test_geometric_decay_with_floor():
    e = np.maximum(0.3 ** np.arange(25), 1e-9)
    fit = fit_geometric_decay(e)
    assert fit.floor == pytest.approx(1e-9)
    assert fit.beta_hat == pytest.approx(0.3, rel=1e-6)


def test_planted_convergence():
    A, c_star = planted_instance(40, 10, 2, 0)
    _, report = harfe_fit(A, A @ c_star, SolverConfig(s=2, mu=1.0, lam=1e-12, max_iter=10, record_iterates=True))
    fit = convergence_fit(report, c_star)
    assert fit.beta_hat is not None and 0 < fit.beta_hat < 1
    errors = [np.linalg.norm(c - c_star) for c in report.coefficient_trace]
    assert errors[9] <= 1e-3 * np.linalg.norm(c_star)
    residual_fit = convergence_fit(report)
    assert residual_fit.beta_hat is not None and residual_fit.beta_hat < 1


def test_convergence_fit_needs_iterates():
    A, c_star = planted_instance(40, 10, 2, 0)
    _, short = harfe_fit(A, A @ c_star, SolverConfig(s=2, max_iter=3))
    with pytest.raises(TraceTooShortError):
        convergence_fit(short)
    _, report = harfe_fit(A, A @ c_star, SolverConfig(s=2, max_iter=6))
    with pytest.raises(ValueError):
        convergence_fit(report, c_star)
