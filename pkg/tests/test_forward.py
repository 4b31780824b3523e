import numpy as np
import pytest

from dpsbp_wave.errors import (
    DimensionMismatch,
    InadmissiblePenalty,
    InadmissibleProblem,
    ZeroAlpha,
)
from dpsbp_wave.forward import (
    BoundaryParams,
    ForwardModel,
    PenaltyConfig,
    SolutionField,
    WaveProblem,
    assemble_forward,
    axis_points,
    block_points,
    build_problem_operators,
    build_space_grid,
    march_multiblock,
)
from dpsbp_wave.linalg import SeparableSolver, Solver
from oracles import dense_forward_matrix

FLAVORS = [("minus", "minus"), ("minus", "center"), ("center", "minus"), ("center", "center")]


def _model(order=4, dim=1, dx=0.1, sigma=0.0, c=1.0, blocks=1, fl=("minus", "minus"),
           final_time=0.4, **kw):
    prob = WaveProblem(dim=dim, final_time=final_time, wave_speed=c, damping=sigma, **kw)
    # at least 2*order+1 time points per block
    dt = min(dx, final_time / (2 * order * blocks))
    axes, tm = build_problem_operators(prob, order, dx, time_step=dt, n_blocks=blocks,
                                       flavor_i=fl[0], flavor_j=fl[1])
    return ForwardModel(prob, axes, tm, n_blocks=blocks)


@pytest.mark.parametrize("fl", FLAVORS)
@pytest.mark.parametrize("sigma", [0.0, 1.0])
def test_matrix_matches_dense_oracle(fl, sigma):
    order, dx = 4, 0.2
    model = _model(order, dx=dx, sigma=sigma, c=0.8, fl=fl, final_time=2.0)
    ref = dense_forward_matrix(order, model.grid.size, model.time.m, dx, dx, 0.8, sigma, *fl)
    np.testing.assert_allclose(model.system.matrix.toarray(), ref, atol=1e-10)


def test_zero_data_gives_zero():
    sol = _model(dim=2, dx=0.25, sigma=1.0).solve()
    assert all(not np.any(b) for b in sol.blocks)


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("sigma", [0.0, 1.0])
def test_constant_state_is_preserved(dim, sigma):
    model = _model(dim=dim, dx=0.25, sigma=sigma, blocks=2, final_time=1.0)
    sol = model.solve(f=np.full(model.grid.size, 3.0), g=np.zeros(model.grid.size))
    for blk in sol.blocks:
        np.testing.assert_allclose(blk, 3.0, atol=1e-11)


@pytest.mark.parametrize("fl", FLAVORS)
def test_linear_in_time_state_is_exact(fl):
    model = _model(dx=0.1, fl=fl, blocks=2, final_time=1.0)
    n = model.grid.size
    sol = model.solve(f=np.ones(n), g=np.full(n, 0.5))
    for b, blk in enumerate(sol.blocks):
        t = sol.times(b)
        np.testing.assert_allclose(blk, (1.0 + 0.5 * t)[:, None] * np.ones(n), atol=1e-10)


def test_static_robin_data_is_reproduced():
    # u = x solves the wave equation with u_x = 1 on both faces
    one = lambda t: 1.0  # noqa: E731
    prob = WaveProblem(dim=1, final_time=1.0, boundary_data=((one, one),),
                       initial_displacement=lambda x: x)
    axes, tm = build_problem_operators(prob, 4, 0.1)
    sol = ForwardModel(prob, axes, tm).solve()
    np.testing.assert_allclose(sol.final(), sol.grid.coords[0], atol=1e-10)


def test_separable_and_direct_solvers_agree():
    model = _model(dim=2, dx=0.25, sigma=1.0, c=0.7, final_time=0.5)
    sysm = model.system
    assert isinstance(sysm.solver, SeparableSolver)
    rng = np.random.default_rng(0)
    rhs = rng.standard_normal(sysm.matrix.shape[0])
    x_sep, _ = sysm.solver.solve(rhs)
    x_lu, _ = Solver(sysm.matrix).solve(rhs)
    np.testing.assert_allclose(x_sep, x_lu, rtol=1e-9, atol=1e-12)


def test_variable_coefficients_fall_back_to_sparse_lu():
    model = _model(dx=0.1, c=lambda x: 1.0 + 0.2 * x, sigma=lambda x: x**2)
    assert isinstance(model.system.solver, Solver)
    model.solve(f=np.cos(np.pi * model.grid.coords[0]))


def test_boundary_damping_only_touches_boundary_nodes():
    bp = BoundaryParams(1.0, -0.5, 1.0, 0.5)
    model = _model(dim=2, dx=0.25, boundary=(bp,))
    grid = model.grid
    diag = grid.boundary.diagonal()
    _, nodes, _ = grid.boundary_nodes()
    mask = np.zeros(grid.size, bool)
    mask[nodes] = True
    assert np.all(diag[~mask] == 0) and np.all(diag[mask] > 0)


def test_boundary_ring_layout_2d():
    grid = _model(dim=2, dx=0.25).grid
    faces, nodes, arcs = grid.boundary_nodes()
    assert faces.size == 4 * 9
    assert np.isclose(arcs[faces == 0].sum(), 2.0)
    x, y = grid.coords
    assert np.allclose(x[nodes[faces == 0]], -1.0) and np.allclose(y[nodes[faces == 3]], 1.0)


def test_solution_field_helpers():
    model = _model(dx=0.1, blocks=2, final_time=1.0)
    sol = model.solve(f=np.ones(model.grid.size), g=np.zeros(model.grid.size))
    assert sol.stacked().shape == (2 * (model.time.m - 1) + 1, model.grid.size)
    np.testing.assert_array_equal(sol.at_time(1.0), sol.final())
    with pytest.raises(ValueError):
        sol.at_time(0.123)
    with pytest.raises(DimensionMismatch):
        SolutionField([np.zeros((3, 2)), np.zeros((3, 4))], [0.0, 1.0], 0.5)


def test_march_multiblock_matches_model():
    prob = WaveProblem(final_time=2.0, initial_displacement=lambda x: np.cos(np.pi * x))
    axes, tm = build_problem_operators(prob, 4, 0.1, n_blocks=2)
    a = march_multiblock(prob, axes, tm, n_blocks=2)
    b = ForwardModel(prob, axes, tm, n_blocks=2).solve()
    np.testing.assert_array_equal(a.final(), b.final())


def test_zero_alpha_is_rejected():
    prob = WaveProblem(boundary=(BoundaryParams(alpha_left=0.0, beta_left=-1.0),))
    with pytest.raises(ZeroAlpha):
        prob.validate()
    axes, tm = build_problem_operators(prob, 4, 0.1)
    with pytest.raises(ZeroAlpha):
        ForwardModel(prob, axes, tm)


def test_inadmissible_boundary_is_rejected():
    prob = WaveProblem(boundary=(BoundaryParams(1.0, 1.0, 1.0, 0.0),))
    with pytest.raises(InadmissibleProblem, match="alpha_left \\* beta_left"):
        prob.validate()


@pytest.mark.parametrize("mu1,mu3", [(-0.4, -1.0), (-1.0, -0.5)])
def test_inadmissible_penalty_is_rejected(mu1, mu3):
    prob = WaveProblem()
    axes, tm = build_problem_operators(prob, 4, 0.2)
    with pytest.raises(InadmissiblePenalty):
        assemble_forward(prob, axes, tm, PenaltyConfig.from_mu(mu1, mu3))


def test_penalty_family_and_constant():
    pen = PenaltyConfig.from_mu(-0.6, -2.0)
    assert pen.admissible and pen.mu4 == pytest.approx(-1.2)
    assert pen.stability_constant() == pytest.approx(max(0.36 / 0.2, 4.0 / 3.0))
    assert PenaltyConfig().is_default


def test_layout_errors():
    with pytest.raises(DimensionMismatch):
        axis_points((0.0, 1.0), 0.3)
    with pytest.raises(DimensionMismatch):
        block_points(10, 2)
    prob = WaveProblem(final_time=1.0)
    axes, tm = build_problem_operators(prob, 4, 0.1)
    with pytest.raises(DimensionMismatch):
        ForwardModel(prob, axes, tm, n_blocks=2)
    with pytest.raises(DimensionMismatch):
        build_problem_operators(prob, 4, 0.1, n_blocks=3)
    with pytest.raises(DimensionMismatch):
        model = ForwardModel(prob, axes, tm)
        model.solve(f=np.ones(3), g=np.ones(3))


def test_grid_rejects_mismatched_triplet():
    prob = WaveProblem()
    axes, _ = build_problem_operators(WaveProblem(domain=((0.0, 1.0),)), 4, 0.1)
    with pytest.raises(DimensionMismatch):
        build_space_grid(prob, axes)
