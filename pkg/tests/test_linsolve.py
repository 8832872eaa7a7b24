import numpy as np
import pytest
import scipy.sparse as sp

from hdgpoisson import hdg
from hdgpoisson.linsolve import (
    ConvergenceError,
    NotPositiveDefiniteError,
    pcg,
    solve,
    solve_direct,
    solve_pcg,
)
from hdgpoisson.mesh import build_ladder_mesh, build_unit_cube_simplex, build_unit_square_simplex


def random_spd(n, seed=0):
    A = np.random.default_rng(seed).standard_normal((n, n))
    return sp.csr_matrix(A.T @ A + np.eye(n))


CASES = {
    "identity": (sp.identity(7, format="csr"), np.arange(1.0, 8.0)),
    "2x2": (sp.csr_matrix([[2.0, 1.0], [1.0, 2.0]]), np.array([1.0, 1.0])),
    "random50": (random_spd(50), np.random.default_rng(1).standard_normal(50)),
}


def test_identity():
    A, b = CASES["identity"]
    np.testing.assert_allclose(solve_direct(A, b), b, rtol=1e-15)


def test_two_by_two():
    A, b = CASES["2x2"]
    np.testing.assert_allclose(solve_direct(A, b), [1 / 3, 1 / 3], rtol=1e-14)


@pytest.mark.parametrize("name", CASES)
def test_direct_residual_and_pcg_agreement(name):
    A, b = CASES[name]
    x = solve_direct(A, b)
    assert np.linalg.norm(A @ x - b) <= 1e-10 * np.linalg.norm(b)
    y = solve_pcg(A, b, tol=1e-11)
    assert np.linalg.norm(A @ y - b) <= 1e-11 * np.linalg.norm(b)
    assert np.linalg.norm(x - y) <= 1e-8 * np.linalg.norm(x)


def test_zero_rhs():
    x, it = pcg(random_spd(10), np.zeros(10))
    assert it == 0 and not x.any()


def test_diagonal_converges_in_one_iteration():
    A = sp.diags(np.linspace(1.0, 100.0, 30)).tocsr()
    b = np.random.default_rng(2).standard_normal(30)
    x, it = pcg(A, b)
    assert it == 1
    np.testing.assert_allclose(A @ x, b, rtol=1e-13)


def test_non_spd_rejected():
    A = sp.csr_matrix([[1.0, 2.0], [2.0, 1.0]])
    b = np.array([1.0, 0.0])
    with pytest.raises(NotPositiveDefiniteError):
        solve_direct(A, b)
    with pytest.raises(NotPositiveDefiniteError):
        pcg(A, b)
    with pytest.raises(NotPositiveDefiniteError):
        pcg(sp.csr_matrix([[-1.0]]), np.array([1.0]))


def test_non_convergence_reports_residual():
    A = random_spd(40, seed=5)
    with pytest.raises(ConvergenceError) as exc:
        pcg(A, np.ones(40), tol=1e-14, max_iter=2)
    assert exc.value.iterations == 2 and exc.value.residual > 1e-14


def test_auto_threshold_and_unknown_method():
    A, b = CASES["random50"]
    np.testing.assert_allclose(solve(A, b, threshold=10), solve(A, b), rtol=1e-8)
    with pytest.raises(ValueError):
        solve(A, b, method="gauss")


def test_deterministic():
    A, b = CASES["random50"]
    assert np.array_equal(solve_direct(A, b), solve_direct(A, b))
    assert np.array_equal(solve_pcg(A, b), solve_pcg(A, b))


@pytest.mark.parametrize("mesh,k", [
    (build_unit_square_simplex(16), 2),
    (build_ladder_mesh(16), 1),
    (build_unit_cube_simplex(4), 1),
], ids=["square-k2", "ladder-k1", "cube-k1"])
def test_solvers_agree_on_trace_systems(mesh, k):
    system = hdg.assemble_global(mesh, k, lambda x: np.sin(3 * x[:, 0]) + x[:, 1])
    assert system.size <= 50_000
    x = solve_direct(system.matrix, system.rhs)
    y = solve_pcg(system.matrix, system.rhs, tol=1e-11)
    assert np.linalg.norm(x - y) <= 1e-8 * np.linalg.norm(x)
