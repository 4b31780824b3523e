import numpy as np
import pytest
import scipy.sparse as sp

from dpsbp_wave.errors import DimensionMismatch, NoConvergence, SingularMatrix
from dpsbp_wave.linalg import (
    AxisModes,
    SeparableSolver,
    SolveMethod,
    Solver,
    kron,
    solve,
    weighted_norm,
)
from dpsbp_wave.operators import build_space_triplet, build_time_ops


def _random_system(n, seed=0):
    rng = np.random.default_rng(seed)
    a = sp.random(n, n, density=0.1, random_state=rng) + sp.eye(n) * n
    return a.tocsr(), rng.standard_normal(n)


def test_direct_solve_matches_dense():
    a, b = _random_system(60)
    x, rep = solve(a, b)
    np.testing.assert_allclose(x, np.linalg.solve(a.toarray(), b), rtol=1e-12)
    assert rep.method is SolveMethod.DIRECT_LU
    assert rep.relative_residual <= 1e-11


def test_transposed_solve_reuses_factorization():
    a, b = _random_system(40, seed=3)
    s = Solver(a)
    x, _ = s.solve(b, transpose=True)
    np.testing.assert_allclose(a.T @ x, b, atol=1e-11)


def test_gmres_path():
    a, b = _random_system(300, seed=1)
    x, rep = Solver(a, direct_limit=10).solve(b)
    assert rep.method is SolveMethod.GMRES
    np.testing.assert_allclose(a @ x, b, atol=1e-8)


def test_zero_rhs_gives_zero():
    a, _ = _random_system(20)
    x, rep = solve(a, np.zeros(20))
    assert not np.any(x) and rep.iterations == 0


def test_singular_matrix_is_reported():
    a = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises((SingularMatrix, NoConvergence)):
        solve(a, np.array([1.0, 0.0]))


def test_shape_checks():
    a, _ = _random_system(10)
    with pytest.raises(DimensionMismatch):
        solve(a, np.ones(9))
    with pytest.raises(DimensionMismatch):
        Solver(sp.csr_matrix(np.ones((2, 3))))
    with pytest.raises(ValueError):
        Solver(a, tol=0.0)


def test_kron_matches_numpy():
    a = np.arange(6.0).reshape(2, 3)
    b = np.array([[1.0, -1.0], [2.0, 0.5]])
    np.testing.assert_array_equal(kron(a, b).toarray(), np.kron(a, b))


def test_weighted_norm():
    assert weighted_norm([1.0, 4.0], [3.0, 2.0]) == pytest.approx(5.0)
    assert weighted_norm(sp.diags([2.0, 2.0]), [1.0, 1.0]) == pytest.approx(2.0)
    with pytest.raises(DimensionMismatch):
        weighted_norm([1.0], [1.0, 2.0])


def test_axis_modes_diagonalize_second_derivative():
    tri = build_space_triplet(4, 21, 0.1)
    lap = (-tri.h_inv @ tri.d_minus.T @ tri.h @ tri.d_minus).toarray()
    modes = AxisModes.self_adjoint(lap, tri.weights)
    rebuilt = modes.vectors @ np.diag(modes.eigenvalues) @ modes.inverse
    np.testing.assert_allclose(rebuilt, lap, atol=1e-9)
    assert modes.eigenvalues.max() < 1e-10


def test_separable_solver_matches_direct():
    tri = build_space_triplet(2, 9, 0.25)
    tm = build_time_ops(2, 7, 0.1)
    lap = (-tri.h_inv @ tri.d_minus.T @ tri.h @ tri.d_minus).toarray()
    d = tm.penalized("minus").toarray()
    kappa, scale = 0.7, 1.3
    n = tri.n
    a = (np.kron(d @ d, np.eye(n * n)) + kappa * np.kron(d, np.eye(n * n))
         - scale * np.kron(np.eye(tm.m), np.kron(lap, np.eye(n)) + np.kron(np.eye(n), lap)))
    modes = AxisModes.self_adjoint(lap, tri.weights)
    sep = SeparableSolver(a, d @ d, d, kappa, scale, [modes, modes])
    rhs = np.random.default_rng(4).standard_normal(a.shape[0])
    x, rep = sep.solve(rhs)
    assert rep.method is SolveMethod.SEPARABLE
    np.testing.assert_allclose(x, np.linalg.solve(a, rhs), rtol=1e-9, atol=1e-11)
    with pytest.raises(DimensionMismatch):
        sep.solve(rhs[:-1])
