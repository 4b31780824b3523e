import numpy as np
import pytest

from dpsbp_wave.diagnostics import (
    auxiliary_field,
    convergence_rate,
    energy_trace,
    exact_solution,
    l2_error,
)
from dpsbp_wave.errors import DegenerateInput, DimensionMismatch
from dpsbp_wave.forward import PenaltyConfig, SolutionField
from dpsbp_wave.operators import build_time_ops
from oracles import pde_residual
from scenarios import cosine, gaussian, model_for


def test_auxiliary_field_of_constant_state_vanishes():
    tm = build_time_ops(4, 11, 0.1)
    f = np.array([1.0, -2.0, 0.5])
    assert np.allclose(auxiliary_field(np.tile(f, (11, 1)), f, tm), 0.0)


def test_auxiliary_field_of_linear_state_is_its_slope():
    tm = build_time_ops(4, 11, 0.1, "center", "center")
    t = 0.1 * np.arange(11)
    v = auxiliary_field(np.outer(t, np.ones(2)), np.zeros(2), tm)
    np.testing.assert_allclose(v, 1.0, atol=1e-12)


def test_auxiliary_field_penalizes_initial_mismatch():
    tm = build_time_ops(2, 5, 0.5)
    v = auxiliary_field(np.ones((5, 1)), np.zeros(1), tm, mu1=-1.0)
    assert v[0, 0] == pytest.approx(1.0 / tm.weights[0])
    assert np.allclose(v[1:], 0.0)


@pytest.mark.parametrize("dim,c,sigma", [(1, 1.0, 0.0), (1, 1.0, 1.0), (2, 1.0, 1.0),
                                         (2, 0.5, 0.0), (1, 0.1, 2.0)])
def test_exact_solution_satisfies_the_pde(dim, c, sigma):
    ex = exact_solution(dim, c, sigma)
    pts = [np.linspace(-0.9, 0.8, 7)] * dim
    res = pde_residual(ex, dim, c, sigma, pts, 0.7)
    assert np.abs(res).max() <= 1e-7


def test_exact_solution_initial_data():
    for sigma in (0.0, 1.0, 3.0):
        ex = exact_solution(1, 1.0, sigma)
        assert ex.phi(0.0) == pytest.approx(1.0)
        x = np.linspace(-1, 1, 5)
        np.testing.assert_allclose(ex(x, 0.0), np.cos(np.pi * x))
        h = 1e-6
        assert np.abs((ex(x, h) - ex(x, -h)) / (2 * h)).max() < 1e-6


def test_undamped_solution_is_a_standing_wave():
    ex = exact_solution(1, 1.0, 0.0)
    x, t = np.linspace(-1, 1, 9), 0.37
    np.testing.assert_allclose(ex(x, t), np.cos(np.pi * t) * np.cos(np.pi * x), atol=1e-15)
    ex2 = exact_solution(2, 1.0, 0.0)
    np.testing.assert_allclose(ex2(x, x, t),
                               np.cos(np.sqrt(2) * np.pi * t) * np.cos(np.pi * x) ** 2,
                               atol=1e-15)


def test_critically_damped_branch_and_continuity():
    c = 1.0 / (2 * np.pi)  # omega = 0 for sigma = 1 in 1D
    ex = exact_solution(1, c, 1.0)
    assert ex._zero_branch()
    assert ex.phi(2.0) == pytest.approx(2.0)
    for eps in (1e-6, -1e-6):
        near = exact_solution(1, c * (1 + eps), 1.0)
        assert not near._zero_branch()
        assert near.phi(2.0) == pytest.approx(2.0, rel=1e-5)


def test_exact_solution_validation():
    with pytest.raises(ValueError):
        exact_solution(3, 1.0, 0.0)
    with pytest.raises(ValueError):
        exact_solution(1, 0.0, 0.0)
    with pytest.raises(DimensionMismatch):
        exact_solution(2, 1.0, 0.0)(np.zeros(3), 0.0)


def test_convergence_rate_examples():
    hs = [0.1, 0.05, 0.025]
    assert convergence_rate([(h, 3 * h**2) for h in hs]) == pytest.approx(2.0)
    assert convergence_rate([(h, 0.7) for h in hs]) == pytest.approx(0.0, abs=1e-12)
    assert convergence_rate([(h, h**4.5) for h in hs]) == pytest.approx(4.5)


@pytest.mark.parametrize("pairs", [[(0.1, 1.0)], [(0.1, 1.0), (0.1, 0.5)],
                                   [(0.1, 0.0), (0.05, 1.0)], [(-0.1, 1.0), (0.05, 1.0)],
                                   [(0.1, np.nan), (0.05, 1.0)]])
def test_convergence_rate_rejects_degenerate_input(pairs):
    with pytest.raises(DegenerateInput):
        convergence_rate(pairs)


def test_l2_error_of_sampled_exact_solution_is_zero():
    model = model_for(1, 0.1, sigma=1.0, blocks=2)
    ex = exact_solution(1, 1.0, 1.0)
    blocks = [np.array([ex(model.grid.coords[0], t) for t in off + model.time.step
                        * np.arange(model.time.m)]) for off in model.offsets]
    sol = SolutionField(blocks, model.offsets, model.time.step, model.grid)
    assert l2_error(sol, ex) == pytest.approx(0.0, abs=1e-15)
    assert l2_error(sol, ex, at_time=1.0) == pytest.approx(0.0, abs=1e-15)
    assert l2_error(sol, exact_solution(1, 1.0, 0.0)) > 0.01


def test_forward_error_is_small_on_a_fine_grid():
    model = model_for(1, 0.025, sigma=1.0, initial=cosine)
    assert l2_error(model.solve(), exact_solution(1, 1.0, 1.0)) < 1e-5


@pytest.mark.parametrize("dim,dx", [(1, 0.05), (2, 0.125)])
@pytest.mark.parametrize("sigma", [0.0, 1.0])
@pytest.mark.parametrize("fl", [("minus", "minus"), ("center", "center")])
def test_energy_does_not_grow(dim, dx, sigma, fl):
    model = model_for(dim, dx, sigma, fl=fl, blocks=2, dt=0.125 if dim == 2 else None,
                      initial=gaussian(dim))
    sol = model.solve()
    trace = energy_trace(sol, model.problem, model.grid, model.time)
    assert trace.energy.size == 1 + 2 * model.time.m
    assert trace.final <= trace.initial * (1 + 1e-10)
    assert trace.lemma_gap() >= -1e-12 * trace.initial
    if sigma > 0:
        assert trace.damping.sum() > 0


def test_lemma_gap_with_non_default_penalties():
    pen = PenaltyConfig.from_mu(-0.6, -2.0)
    model = model_for(1, 0.05, 1.0, initial=gaussian(1), pen=pen)
    sol = model.solve()
    trace = energy_trace(sol, model.problem, model.grid, model.time, pen)
    assert trace.stability_constant == pytest.approx(1.8)
    assert trace.lemma_gap() >= 0


def test_energy_of_initial_data_matches_quadrature():
    model = model_for(1, 0.05, initial=cosine)
    sol = model.solve()
    trace = energy_trace(sol, model.problem, model.grid, model.time)
    # 0.5 * int (pi sin(pi x))^2 dx over [-1, 1] = pi^2 / 2
    assert trace.initial == pytest.approx(np.pi**2 / 2, rel=1e-3)
