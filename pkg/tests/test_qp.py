import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import enumerate_qp, random_qp
from wslip import qp


def test_one_dimensional_active_bound():
    # min z^2 s.t. z >= 1, written as -z <= -1
    prob = qp.QpProblem([[2.0]], [0.0], A_in=[[-1.0]], b_in=[-1.0])
    sol = qp.solve(prob)
    assert sol.ok
    assert sol.z[0] == pytest.approx(1.0, abs=1e-12)
    assert sol.ineq_multipliers[0] == pytest.approx(2.0, abs=1e-10)
    assert sol.active_set == (0,)
    assert max(qp.kkt_residuals(prob, sol).values()) < 1e-10


def test_unconstrained():
    P = np.array([[4.0, 1.0], [1.0, 3.0]])
    c = np.array([1.0, -2.0])
    assert np.allclose(qp.solve(qp.QpProblem(P, c)).z, -np.linalg.solve(P, c))
    assert np.allclose(qp.solve_equality_qp(P, c).z, -np.linalg.solve(P, c))


def test_symmetric_projection():
    sol = qp.solve_equality_qp(np.eye(2), np.zeros(2), [[1.0, 1.0]], [1.0])
    assert np.allclose(sol.z, [0.5, 0.5])


@given(st.integers(1, 8), st.integers(0, 3), st.integers(0, 10_000))
def test_equality_qp_matches_null_space_oracle(n, m, seed):
    m = min(m, n - 1) if n > 1 else 0
    rng = np.random.default_rng(seed)
    F = rng.normal(size=(n, n))
    P = F.T @ F + 0.5 * np.eye(n)
    c = rng.normal(size=n)
    A = rng.normal(size=(m, n))
    b = rng.normal(size=m)
    sol = qp.solve_equality_qp(P, c, A, b)
    # null-space method: z = z_p + Z w
    z_p = np.linalg.lstsq(A, b, rcond=None)[0] if m else np.zeros(n)
    Z = np.linalg.svd(A)[2][m:].T if m else np.eye(n)
    w = np.linalg.solve(Z.T @ P @ Z, -Z.T @ (P @ z_p + c))
    assert np.allclose(sol.z, z_p + Z @ w, rtol=1e-9, atol=1e-9)


def test_singular_kkt_reported():
    with pytest.raises(qp.SingularKKTError):
        qp.solve_equality_qp(np.eye(2), np.zeros(2), [[1.0, 1.0], [1.0, 1.0]], [1.0, 2.0])


@pytest.mark.parametrize("seed", range(60))
def test_matches_enumeration_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 9))
    prob = random_qp(rng, n, int(rng.integers(0, 7)), int(rng.integers(0, min(n, 3))))
    sol = qp.solve(prob)
    z_o, f_o = enumerate_qp(prob)
    assert sol.ok
    assert np.allclose(sol.z, z_o, rtol=0, atol=1e-7 * (1 + np.abs(z_o).max()))
    assert sol.objective <= f_o + 1e-9 * (1 + abs(f_o))
    res = qp.kkt_residuals(prob, sol)
    assert res["inequality"] < 1e-8 and res["equality"] < 1e-8 and res["dual"] < 1e-8
    assert res["stationarity"] < 1e-6 and res["complementarity"] < 1e-6


@pytest.mark.parametrize("seed", range(20))
def test_semidefinite_objective_not_above_oracle(seed):
    rng = np.random.default_rng(1000 + seed)
    n = int(rng.integers(2, 5))
    prob = random_qp(rng, n, 2, 0, psd_rank=int(rng.integers(1, n)))
    # bound the box so the problem has a finite minimum
    A_in = np.vstack([prob.A_in, np.eye(n), -np.eye(n)])
    b_in = np.concatenate([prob.b_in, np.full(2 * n, 20.0)])
    prob = qp.QpProblem(prob.P, prob.c, A_in=A_in, b_in=b_in)
    sol = qp.solve(prob)
    assert sol.ok
    assert np.max(A_in @ sol.z - b_in) < 1e-8
    best = enumerate_qp(prob)
    if best is not None:
        assert sol.objective <= best[1] + 1e-6 * (1 + abs(best[1]))


@given(st.integers(0, 10_000))
def test_gauge_invariance(seed):
    rng = np.random.default_rng(seed)
    prob = random_qp(rng, 5, 4, 2)
    w = rng.normal(size=2) * 10
    shifted = qp.QpProblem(prob.P, prob.c + prob.A_eq.T @ w, prob.A_eq, prob.b_eq, prob.A_in, prob.b_in)
    a, b = qp.solve(prob), qp.solve(shifted)
    assert np.allclose(a.z, b.z, atol=1e-7)


def test_warm_start_reproduces_solution():
    rng = np.random.default_rng(7)
    prob = random_qp(rng, 6, 6, 1)
    cold = qp.solve(prob)
    warm = qp.solve(prob, warm_start=cold.active_set)
    assert warm.iterations == 1
    assert np.allclose(warm.z, cold.z, atol=1e-10)
    # a wrong guess is discarded
    assert np.allclose(qp.solve(prob, warm_start=range(6)).z, cold.z, atol=1e-8)


def test_infeasible():
    box = qp.QpProblem(np.eye(1), [0.0], A_in=[[1.0], [-1.0]], b_in=[0.0, -1.0])
    assert qp.solve(box).status == "infeasible"
    eq = qp.QpProblem(np.eye(2), np.zeros(2), A_eq=[[1, 1], [1, 1]], b_eq=[0, 1], A_in=[[1, 0]], b_in=[5])
    assert qp.solve(eq).status == "infeasible"


def test_max_iter():
    prob = qp.QpProblem(np.eye(2), [-10.0, -10.0], A_in=np.eye(2), b_in=[1.0, 2.0])
    assert qp.solve(prob, max_iter=1).status == "max_iter"
    assert np.allclose(qp.solve(prob).z, [1.0, 2.0])


def test_problem_validation():
    with pytest.raises(ValueError, match="symmetric"):
        qp.QpProblem([[1.0, 1.0], [0.0, 1.0]], [0, 0])
    with pytest.raises(ValueError, match="semidefinite"):
        qp.solve(qp.QpProblem([[-1.0]], [0.0]))
    with pytest.raises(ValueError):
        qp.QpProblem(np.eye(2), [0, 0, 0])
    with pytest.raises(ValueError):
        qp.QpProblem(np.eye(2), [0, 0], A_in=[[1, 0, 0]], b_in=[1])
