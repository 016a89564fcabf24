import math
from fractions import Fraction as F

import numpy as np
import pytest
from conftest import diagonal_system, random_interpolation
from hypothesis import given, settings, strategies as st

from repdim import errors
from repdim.builders import takagi_system
from repdim.core import as_matrix, build_transition_matrix, compose_inverse
from repdim.pressure import (
    bernoulli_measure,
    comparability_constant,
    dimension_root,
    equilibrium_measure,
    lyapunov_dimension,
    markov_measure,
    perron_prefactor,
    potential_weights,
    pressure_at,
    pressure_bruteforce,
    pressure_matrix,
    singular_value_phi,
    spectral_radius,
)

A = np.array([[0.5, 0.0], [0.5, 0.75]])
TAKAGI_S0 = 2 + math.log(0.75) / math.log(2)


# ---------------------------------------------------------------- singular value function


def test_phi_values():
    assert singular_value_phi(A, 0) == 1
    assert singular_value_phi(A, 2) == pytest.approx(0.375, abs=1e-14)
    assert singular_value_phi(A, 1) == pytest.approx(0.95265, abs=5e-6)
    assert singular_value_phi(A, 1.5) == pytest.approx(0.597700, abs=1e-6)


def test_phi_explicit_svd():
    # 2x2 oracle: singular values from trace and determinant of A^T A
    G = A.T @ A
    tr, det = np.trace(G), np.linalg.det(G)
    a1 = math.sqrt((tr + math.sqrt(tr * tr - 4 * det)) / 2)
    a2 = math.sqrt((tr - math.sqrt(tr * tr - 4 * det)) / 2)
    for s in (0.3, 1.0, 1.7):
        expected = a1**s if s <= 1 else a1 * a2 ** (s - 1)
        assert singular_value_phi(A, s) == pytest.approx(expected, rel=1e-12)
    assert singular_value_phi(A, 3) == pytest.approx((a1 * a2) ** 1.5, rel=1e-12)


def test_phi_zero_matrix():
    assert singular_value_phi(np.zeros((2, 2)), 0.5) == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.floats(0, 3))
def test_phi_submultiplicative(seed, s):
    rng = np.random.default_rng(seed)
    X, Y = rng.normal(size=(2, 3, 3))
    assert singular_value_phi(X @ Y, s) <= singular_value_phi(X, s) * singular_value_phi(Y, s) * (1 + 1e-10)


# ---------------------------------------------------------------- pressure matrices and radii


def test_takagi_pressure_matrix(takagi):
    M = np.asarray(pressure_matrix(takagi, s=1.5))
    np.testing.assert_allclose(M, 0.75 * 0.5**0.5, rtol=1e-12)


def test_pressure_matrix_at_zero(t1):
    np.testing.assert_array_equal(np.asarray(pressure_matrix(t1, s=0)), as_matrix(build_transition_matrix(t1)))


def test_t1_pressure_matrix_rows(t1):
    M = np.asarray(pressure_matrix(t1, s=1.39024))
    Q = as_matrix(build_transition_matrix(t1))
    for row, value in zip(M, (0.50867, 0.32565, 0.50867)):
        np.testing.assert_allclose(row[row > 0], value, atol=5e-5)
    assert np.all((M > 0) == (Q > 0))
    assert spectral_radius(M) == pytest.approx(1.0, abs=5e-4)


def test_pressure_matrix_decreasing(t1):
    a, b = np.asarray(pressure_matrix(t1, s=0.7)), np.asarray(pressure_matrix(t1, s=1.2))
    Q = as_matrix(build_transition_matrix(t1)) > 0
    assert np.all(b[Q] < a[Q])


def test_pressure_matrix_needs_markov(beta32):
    with pytest.raises(errors.NotMarkov):
        pressure_matrix(beta32, s=1.0)


def test_spectral_radius_examples():
    assert spectral_radius(np.eye(2)) == pytest.approx(1.0, rel=1e-12)
    assert spectral_radius([[2, 1], [1, 2]]) == pytest.approx(3.0, rel=1e-12)
    # reducible: max over the diagonal blocks
    assert spectral_radius([[1, 5, 0], [0, 2, 0], [0, 7, 0.5]]) == pytest.approx(2.0, rel=1e-12)
    assert spectral_radius(np.zeros((2, 2))) == 0


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([2, 3]), st.floats(0, 0.6))
def test_perron_matches_eigenvalues(seed, n, sparsity):
    rng = np.random.default_rng(seed)
    M = rng.random((n, n)) * (rng.random((n, n)) > sparsity)
    # characteristic polynomial roots as an independent oracle
    roots = np.roots(np.poly(M))
    expected = float(np.max(np.abs(roots))) if roots.size else 0.0
    assert spectral_radius(M) == pytest.approx(expected, rel=1e-10, abs=1e-12)


# ---------------------------------------------------------------- pressure


def test_takagi_pressure_values(takagi):
    assert pressure_at(takagi, s=2) == pytest.approx(math.log(0.75), abs=1e-12)
    assert pressure_at(takagi, s=1.5) == pytest.approx(math.log(2 * 0.75 * 0.5**0.5), abs=1e-12)
    assert pressure_at(takagi, s=1.5) == pytest.approx(0.0588915, abs=1e-7)
    assert pressure_at(takagi, s=0) == pytest.approx(math.log(2), abs=1e-12)


def test_pressure_strictly_decreasing(t1, t2):
    for S in (t1, t2):
        grid = np.linspace(0, 2, 41)
        vals = [pressure_at(S, s=s) for s in grid]
        assert np.all(np.diff(vals) < 0)


def test_rectangle_mode_exact(takagi):
    for n in (1, 4, 9):
        assert pressure_bruteforce(takagi, s=1.5, n=n, mode="rectangle") == pytest.approx(
            math.log(2 * 0.75 * 0.5**0.5), abs=1e-12
        )


def test_bruteforce_at_zero_counts_words(t1):
    for mode in ("singular", "rectangle"):
        assert pressure_bruteforce(t1, s=0, n=6, mode=mode) == pytest.approx(math.log(_count(t1, 6)) / 6, abs=1e-12)


def _count(S, n):
    Q = as_matrix(build_transition_matrix(S)).astype(object)
    one = np.ones(Q.shape[0], dtype=object)
    return int(one @ np.linalg.matrix_power(Q, n - 1) @ one)


def test_bruteforce_singular_takagi(takagi):
    c = comparability_constant(takagi, 1.5)
    assert abs(pressure_bruteforce(takagi, s=1.5, n=10) - pressure_at(takagi, s=1.5)) <= math.log(c) / 10


def test_bruteforce_budget(takagi, monkeypatch):
    monkeypatch.setenv("REPDIM_WORD_BUDGET", "1000")
    with pytest.raises(errors.BudgetExceeded):
        pressure_bruteforce(takagi, s=1.0, n=12)


def test_bruteforce_rejects_bad_mode(takagi):
    with pytest.raises(errors.ValidationError):
        pressure_bruteforce(takagi, s=1.0, n=2, mode="other")


def _comparability_case(S, s, rng, n):
    Q = as_matrix(build_transition_matrix(S))
    w = [int(rng.integers(Q.shape[0]))]
    while len(w) < n:
        w.append(int(rng.choice(np.flatnonzero(Q[w[-1]]))))
    phi = singular_value_phi(compose_inverse(S, w).linear, s)
    birk = float(np.prod(potential_weights(S, s)[w]))
    return phi, birk


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 14), st.floats(0.05, 1.95))
def test_comparability_on_random_words(seed, n, s):
    rng = np.random.default_rng(seed)
    S = random_interpolation(rng)
    c = comparability_constant(S, s)
    phi, birk = _comparability_case(S, s, rng, n)
    assert birk / c <= phi * (1 + 1e-12)
    assert phi <= c * birk * (1 + 1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_bruteforce_within_rigorous_bound(seed):
    rng = np.random.default_rng(1000 + seed)
    S = random_interpolation(rng)
    for s in (0.4, 1.0, 1.6):
        bound = (math.log(comparability_constant(S, s)) + math.log(perron_prefactor(S, None, s))) / 10
        assert abs(pressure_bruteforce(S, s=s, n=10) - pressure_at(S, s=s)) <= bound


# ---------------------------------------------------------------- root


def test_takagi_root(takagi):
    rep = dimension_root(takagi)
    assert rep.s0 == pytest.approx(TAKAGI_S0, abs=1e-7)
    assert abs(rep.pressure_at_root) <= 1e-9
    assert rep.method == "spectral_bisection" and not rep.saturated
    lo, hi = rep.bracket
    assert lo <= rep.s0 <= hi and hi - lo <= 1e-8


def test_preset_interpolation_roots(t1, t2):
    assert dimension_root(t1).s0 == pytest.approx(1.39024, abs=5e-5)
    assert dimension_root(t2).s0 == pytest.approx(1.45156, abs=5e-5)


def test_saturated_root():
    from repdim.core import BaseBranch, FiberBranch, build_system

    one = ((F(1),),)
    cells = [((F(0), F(1, 2)),), ((F(1, 2), F(1)),)]
    bases = [BaseBranch(0, F(3, 2), one, (F(0),)), BaseBranch(1, F(3, 2), one, (F(-1, 2),))]
    fibers = [FiberBranch(F(6, 5), one, ((F(0),),), (F(0),))] * 2
    S = build_system(1, 1, cells, bases, fibers)
    rep = dimension_root(S, Q=np.ones((2, 2)))
    assert rep.saturated and rep.s0 == 2


def test_no_cycle(takagi):
    with pytest.raises(errors.NoCycle):
        dimension_root(takagi, Q=[[0, 1], [0, 0]])


def test_non_markov_root_routes_to_approximation(beta32):
    rep = dimension_root(beta32)
    assert rep.method == "markov_approx_supremum"
    assert 0 <= rep.s0 <= 2


# ---------------------------------------------------------------- measures


def test_lyapunov_uniform(takagi):
    mu = bernoulli_measure([0.5, 0.5])
    D = lyapunov_dimension(takagi, mu)
    expected = min(math.log(2) / math.log(4 / 3), 1 + (math.log(2) - math.log(4 / 3)) / math.log(2))
    assert D == pytest.approx(expected, abs=1e-12)
    assert D == pytest.approx(1.5849625, abs=1e-7)


def test_lyapunov_zero_entropy(takagi):
    assert lyapunov_dimension(takagi, bernoulli_measure([1.0, 0.0])) == 0
    assert lyapunov_dimension(takagi, markov_measure(np.eye(2), [0.0, 1.0])) == 0


def test_lyapunov_exponent_order(takagi):
    mu = bernoulli_measure([0.5, 0.5])
    mu.marginal = np.zeros(2)
    with pytest.raises(errors.ExponentOrderViolated):
        lyapunov_dimension(takagi, mu)


def test_equilibrium_takagi(takagi):
    mu = equilibrium_measure(takagi, s=TAKAGI_S0)
    np.testing.assert_allclose(mu.p, [0.5, 0.5], atol=1e-9)
    np.testing.assert_allclose(equilibrium_measure(takagi, s=0).p, [0.5, 0.5], atol=1e-15)
    assert lyapunov_dimension(takagi, mu) == pytest.approx(TAKAGI_S0, abs=1e-6)


def test_equilibrium_t1(t1):
    s0 = dimension_root(t1).s0
    mu = equilibrium_measure(t1, s=s0)
    assert mu.variant == "markov"
    np.testing.assert_allclose(mu.stationary @ mu.P, mu.stationary, atol=1e-10)
    assert mu.stationary.sum() == pytest.approx(1, abs=1e-12)
    chi1, chi2 = mu.exponents(t1)
    assert chi1 > chi2 > 0
    assert lyapunov_dimension(t1, mu) == pytest.approx(s0, abs=1e-6)


def test_equilibrium_reducible_flagged(t1):
    Q = [[1, 1, 0], [0, 1, 1], [0, 1, 1]]
    mu = equilibrium_measure(t1, Q=Q, s=1.0)
    assert "restricted_to_dominant_class" in mu.flags
    np.testing.assert_allclose(mu.P.sum(axis=1), 1, atol=1e-12)


def test_fiber_term_flag_only_for_k_above_one(takagi):
    from repdim.core import BaseBranch, FiberBranch, build_system

    _, flags = lyapunov_dimension(takagi, bernoulli_measure([0.5, 0.5]), return_flags=True)
    assert flags == []
    one = ((F(1),),)
    eye = ((F(1), F(0)), (F(0), F(1)))
    cells = [((F(0), F(1, 2)),), ((F(1, 2), F(1)),)]
    bases = [BaseBranch(0, F(2), one, (F(0),)), BaseBranch(1, F(2), one, (F(-1),))]
    fibers = [FiberBranch(F(3, 2), eye, ((F(0),), (F(1),)), (F(0), F(0)))] * 2
    S = build_system(1, 2, cells, bases, fibers)
    mu = bernoulli_measure([0.5, 0.5])
    D, flags = lyapunov_dimension(S, mu, return_flags=True)
    assert flags == ["corrected_fiber_term"]
    h, c1, c2 = math.log(2), math.log(2), math.log(1.5)
    assert D == pytest.approx(min(h / c2, 2 + (h - 2 * c2) / c1), abs=1e-12)


def test_uncoupled_root(diagonal):
    # fiber weights 2/3 + 3/4 exceed one, so the root solves (17/12) 2^(1 - s) = 1
    assert dimension_root(diagonal).s0 == pytest.approx(1 + math.log2(17 / 12), abs=1e-8)
