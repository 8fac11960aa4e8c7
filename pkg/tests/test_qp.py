import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import enumerate_qp

from delam.qp import IndefiniteHessian, MaxIterations, QpProblem, solve_qp


def random_problem(seed, n_max=8):
    r = np.random.default_rng(seed)
    n = int(r.integers(1, n_max + 1))
    A = r.standard_normal((n, n))
    H = A @ A.T + 0.1 * np.eye(n)
    g = r.standard_normal(n) * 2
    nonneg = np.flatnonzero(r.random(n) < 0.7)
    return QpProblem(H, g, nonneg)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_matches_enumeration(seed):
    p = random_problem(seed)
    sol = solve_qp(p, tol_kkt=1e-11)
    x_ref, f_ref = enumerate_qp(p.H, p.g, p.nonneg)
    assert sol.objective == pytest.approx(f_ref, rel=1e-9, abs=1e-9)
    assert np.allclose(sol.x, x_ref, atol=1e-7)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_kkt_certificate(seed):
    p = random_problem(seed, 12)
    sol = solve_qp(p)
    grad = p.H @ sol.x + p.g
    assert np.all(sol.x[p.nonneg] >= 0)
    free = np.setdiff1d(np.arange(p.n), sol.active_set)
    assert np.abs(grad[free]).max(initial=0) <= 1e-7 * max(1, np.abs(p.g).max())
    assert np.all(sol.multipliers[sol.active_set] >= -1e-7)
    assert np.all(np.diff(sol.objective_history) <= 1e-12 * (1 + np.abs(sol.objective_history[:-1])))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), logs=st.lists(st.floats(-4, 4), min_size=12, max_size=12))
def test_scaling_invariance(seed, logs):
    # x = D y maps the problem to an equivalent one; bounds at zero are unchanged
    p = random_problem(seed, 12)
    d = 10.0 ** np.asarray(logs[: p.n])
    q = QpProblem(p.H * d[:, None] * d[None, :], d * p.g, p.nonneg)
    x = solve_qp(p, tol_kkt=1e-11).x
    y = solve_qp(q, tol_kkt=1e-11).x
    assert np.allclose(d * y, x, atol=1e-7 * (1 + np.abs(x).max()))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_warm_start_from_solution(seed):
    p = random_problem(seed, 12)
    sol = solve_qp(p)
    again = solve_qp(p, warm_start=sol.x, warm_active=sol.active_set)
    assert again.iterations <= 2
    assert np.allclose(again.x, sol.x, atol=1e-9)


def test_fixed_values():
    H = np.eye(3)
    g = np.array([-1.0, -1.0, -1.0])
    sol = solve_qp(QpProblem(H, g, nonneg=[0, 1], fixed=[2], fixed_values=[5.0]))
    assert np.allclose(sol.x, [1.0, 1.0, 5.0])


def test_bound_becomes_active():
    sol = solve_qp(QpProblem(np.eye(2), np.array([1.0, -2.0]), nonneg=[0, 1]))
    assert np.allclose(sol.x, [0.0, 2.0])
    assert list(sol.active_set) == [0]
    assert sol.multipliers[0] == pytest.approx(1.0)


def test_indefinite_raises():
    H = np.array([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(IndefiniteHessian):
        solve_qp(QpProblem(H, np.zeros(2)))
    with pytest.raises(IndefiniteHessian):
        solve_qp(QpProblem(np.diag([1.0, 0.0]), np.ones(2)))


def test_max_iterations_keeps_iterate():
    n = 6
    p = QpProblem(np.eye(n), np.ones(n), nonneg=np.arange(n))
    with pytest.raises(MaxIterations) as exc:
        solve_qp(p, warm_start=np.ones(n), warm_active=[], max_iter=1)
    assert exc.value.solution.x.shape == (n,)


def test_json_round_trip(rng):
    p = random_problem(3, 10)
    q = QpProblem.from_json(p.to_json())
    assert np.allclose(q.H.toarray(), p.H) and np.array_equal(q.nonneg, p.nonneg)
    assert solve_qp(q).objective == pytest.approx(solve_qp(p).objective, rel=1e-12)


def test_large_sparse_path():
    n = 3000
    H = sp.diags([-np.ones(n - 1), 4 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]).tocsr()
    r = np.random.default_rng(0)
    g = r.standard_normal(n)
    g[::50] = 5.0
    sol = solve_qp(QpProblem(H, g, nonneg=np.arange(0, n, 50)))
    grad = H @ sol.x + g
    free = np.setdiff1d(np.arange(n), sol.active_set)
    assert np.abs(grad[free]).max() < 1e-7
    assert np.all(sol.x[::50] >= 0)
