"""Recovery of the initial displacement from boundary traces.

The misfit is the space-time quadrature of the squared trace mismatch over
the boundary (both endpoints in 1D, the four faces in 2D, each face
weighted by the transverse quadrature). Its gradient with respect to the
initial displacement comes from one forward and one adjoint sweep. The
optimizer works in ``eta = Hx^(1/2) f`` so that Euclidean BFGS steps are
consistent with the ``Hx`` inner product.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import line_search

from .adjoint import AdjointField, assemble_adjoint, backpropagate
from .errors import DimensionMismatch, LineSearchFailure
from .forward import ForwardModel, PenaltyConfig, SolutionField, SpaceGrid
from .linalg import weighted_norm


class MisfitForm(enum.Enum):
    """Time weighting of the boundary misfit.

    ``SYMMETRIC`` weights every face by the time quadrature. ``PRINTED``
    leaves the left faces unweighted in time (a plain sum over time nodes).
    """

    SYMMETRIC = "symmetric"
    PRINTED = "printed"

    @classmethod
    def parse(cls, value) -> "MisfitForm":
        return value if isinstance(value, cls) else cls(str(value).lower())


@dataclass(frozen=True, eq=False)
class BoundaryLayout:
    """Boundary entries of a grid: face index, node index and arc weight."""

    faces: np.ndarray
    nodes: np.ndarray
    arcs: np.ndarray

    @classmethod
    def from_grid(cls, grid: SpaceGrid) -> "BoundaryLayout":
        return cls(*grid.boundary_nodes())

    @property
    def size(self) -> int:
        return self.nodes.size

    def time_weights(self, tm_weights, form: MisfitForm) -> np.ndarray:
        """``(m, n_entries)`` quadrature weight of every trace sample."""
        w = np.outer(tm_weights, self.arcs)
        if form is MisfitForm.PRINTED:
            left = self.faces % 2 == 0
            w[:, left] = self.arcs[left][None, :]
        return w


@dataclass
class Observations:
    """Boundary traces for every time node of every block.

    ``values[b, k, i]`` is the trace at time ``times[b, k]`` and boundary
    entry ``i`` of ``layout``. In 2D corner nodes appear once per face.
    """

    values: np.ndarray
    times: np.ndarray
    layout: BoundaryLayout

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.times = np.asarray(self.times, dtype=float)
        if self.values.ndim != 3 or self.values.shape[:2] != self.times.shape:
            raise DimensionMismatch("values must be (blocks, time nodes, boundary entries)")
        if self.values.shape[2] != self.layout.size:
            raise DimensionMismatch("one trace per boundary entry required")

    @classmethod
    def from_solution(cls, sol: SolutionField) -> "Observations":
        layout = BoundaryLayout.from_grid(sol.grid)
        values = np.stack([blk[:, layout.nodes] for blk in sol.blocks])
        times = np.stack([sol.times(b) for b in range(len(sol.blocks))])
        return cls(values, times, layout)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["t", "node_id", "value"])
            for b in range(self.values.shape[0]):
                for k, t in enumerate(self.times[b]):
                    for node, v in zip(self.layout.nodes, self.values[b, k]):
                        out.writerow([f"{t:.17g}", int(node), f"{v:.17g}"])

    @classmethod
    def from_csv(cls, path, grid: SpaceGrid, times) -> "Observations":
        """Read traces written by :meth:`to_csv` for ``grid`` and block ``times``."""
        layout = BoundaryLayout.from_grid(grid)
        times = np.asarray(times, dtype=float)
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["t", "node_id", "value"]:
                raise DimensionMismatch(f"unexpected header {header}")
            rows = [(float(t), int(n), float(v)) for t, n, v in reader]
        expected = times.size * layout.size
        if len(rows) != expected:
            raise DimensionMismatch(f"expected {expected} rows, found {len(rows)}")
        arr = np.array(rows)
        want_t = np.repeat(times.ravel(), layout.size)
        want_n = np.tile(layout.nodes, times.size)
        if not (np.allclose(arr[:, 0], want_t, rtol=0, atol=1e-12)
                and np.array_equal(arr[:, 1].astype(int), want_n)):
            raise DimensionMismatch("observation rows do not match the grid layout")
        values = arr[:, 2].reshape(times.shape + (layout.size,))
        return cls(values, times, layout)


def _check(u: SolutionField, obs: Observations):
    if len(u.blocks) != obs.values.shape[0] or u.m != obs.values.shape[1]:
        raise DimensionMismatch("solution and observations have different time layouts")
    if u.blocks[0].shape[1] <= int(obs.layout.nodes.max()):
        raise DimensionMismatch("observation nodes outside the spatial grid")


def _residuals(u: SolutionField, obs: Observations):
    _check(u, obs)
    return [blk[:, obs.layout.nodes] - obs.values[b] for b, blk in enumerate(u.blocks)]


def objective(u: SolutionField, obs: Observations, tm, form=MisfitForm.SYMMETRIC) -> float:
    """Half the weighted sum of squared trace mismatches."""
    form = MisfitForm.parse(form)
    w = obs.layout.time_weights(tm.weights, form)
    return 0.5 * float(sum(np.sum(w * r * r) for r in _residuals(u, obs)))


def objective_gradient_wrt_grad_U(u: SolutionField, obs: Observations, tm,
                                  form=MisfitForm.SYMMETRIC) -> list:
    """Gradient of :func:`objective` in the ``Ht (x) Hx`` inner product, per block.

    Entries vanish away from boundary nodes.
    """
    form = MisfitForm.parse(form)
    grid = u.grid
    w = obs.layout.time_weights(tm.weights, form)
    out = []
    for r in _residuals(u, obs):
        g = np.zeros((u.m, grid.size))
        np.add.at(g.T, obs.layout.nodes, (w * r).T)
        out.append(g / np.outer(tm.weights, grid.weights))
    return out


def gradient_wrt_initial(field_: AdjointField, grid: SpaceGrid) -> np.ndarray:
    """``Hx``-gradient of the objective with respect to the initial displacement."""
    return field_.grad_f / grid.weights


@dataclass
class InverseState:
    """Iterates and histories of one optimization run."""

    f_iter: np.ndarray
    eta: np.ndarray
    sqrt_weights: np.ndarray
    misfit_history: list = field(default_factory=list)
    error_history: list = field(default_factory=list)
    gradient_norms: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    def record(self, eta, misfit, gnorm, f_true=None):
        self.eta = np.array(eta, dtype=float)
        self.f_iter = self.eta / self.sqrt_weights
        self.misfit_history.append(float(misfit))
        self.gradient_norms.append(float(gnorm))
        if f_true is not None:
            self.error_history.append(
                weighted_norm(self.sqrt_weights**2, self.f_iter - f_true))


class InitialDisplacementInversion:
    """Objective and gradient with respect to ``eta = Hx^(1/2) f``.

    The initial velocity is kept at the problem's value. Forward and
    adjoint block factorizations are built once and reused.
    """

    def __init__(self, model: ForwardModel, obs: Observations,
                 form=MisfitForm.SYMMETRIC, f_true: Optional[np.ndarray] = None):
        self.model = model
        self.obs = obs
        self.form = MisfitForm.parse(form)
        self.grid = model.grid
        self.time = model.time
        self.adjoint = assemble_adjoint(model.problem, self.grid, self.time, model.penalty)
        self.sqrt_weights = np.sqrt(self.grid.weights)
        self.velocity = model.initial_data()[1]
        self.f_true = None if f_true is None else np.asarray(f_true, dtype=float)
        self.evaluations = 0

    def to_eta(self, f) -> np.ndarray:
        return self.sqrt_weights * np.asarray(f, dtype=float)

    def to_f(self, eta) -> np.ndarray:
        return np.asarray(eta, dtype=float) / self.sqrt_weights

    def forward(self, f) -> SolutionField:
        return self.model.solve(f=np.asarray(f, dtype=float), g=self.velocity)

    def misfit(self, f) -> float:
        return objective(self.forward(f), self.obs, self.time, self.form)

    def objective_and_gradient(self, eta):
        """Return ``(J, Hx^(1/2) grad_f J)`` at ``eta``."""
        self.evaluations += 1
        sol = self.forward(self.to_f(eta))
        value = objective(sol, self.obs, self.time, self.form)
        grads = objective_gradient_wrt_grad_U(sol, self.obs, self.time, self.form)
        adj = backpropagate(self.model, self.adjoint, grads)
        return value, self.sqrt_weights * gradient_wrt_initial(adj, self.grid)


def compute_objective_and_gradient(problem: InitialDisplacementInversion, eta):
    return problem.objective_and_gradient(eta)


def optimize(problem: InitialDisplacementInversion, init_guess, max_iter: int = 10,
             gtol: float = 1e-10, c1: float = 1e-4, c2: float = 0.9,
             callback: Optional[Callable] = None) -> InverseState:
    """Dense BFGS in ``eta`` with a strong-Wolfe line search.

    The inverse Hessian starts as the identity and is rescaled by
    ``s^T y / y^T y`` before the first update. ``callback(state)`` runs
    after the initial point and after each accepted step.
    """
    eta = problem.to_eta(init_guess)
    state = InverseState(problem.to_f(eta), eta, problem.sqrt_weights)
    value, grad = problem.objective_and_gradient(eta)
    state.record(eta, value, np.linalg.norm(grad), problem.f_true)
    if callback:
        callback(state)
    n = eta.size
    hinv = np.eye(n)
    cache = {}

    def fun(x):
        key = x.tobytes()
        if key not in cache:
            cache.clear()
            cache[key] = problem.objective_and_gradient(x)
        return cache[key][0]

    def jac(x):
        fun(x)
        return cache[x.tobytes()][1]

    cache[eta.tobytes()] = (value, grad)
    for it in range(max_iter):
        if np.linalg.norm(grad) < gtol:
            state.converged = True
            break
        direction = -hinv @ grad
        alpha, _, _, new_value, _, new_grad = line_search(
            fun, jac, eta, direction, gfk=grad, old_fval=value, c1=c1, c2=c2)
        if alpha is None and it > 0:
            # retry once from a steepest-descent model before giving up
            hinv = np.eye(n)
            direction = -grad
            alpha, _, _, new_value, _, new_grad = line_search(
                fun, jac, eta, direction, gfk=grad, old_fval=value, c1=c1, c2=c2)
        if alpha is None or not new_value < value:
            raise LineSearchFailure(f"no acceptable step at iteration {it + 1}", state)
        if new_grad is None:
            new_grad = jac(eta + alpha * direction)
        s = alpha * direction
        y = new_grad - grad
        eta, value, grad = eta + s, new_value, new_grad
        sy = float(s @ y)
        if sy > 0:
            if it == 0:
                hinv = np.eye(n) * (sy / float(y @ y))
            rho = 1.0 / sy
            hy = hinv @ y
            hinv = (hinv - rho * (np.outer(s, hy) + np.outer(hy, s))
                    + (rho * rho * float(y @ hy) + rho) * np.outer(s, s))
        state.iterations = it + 1
        state.record(eta, value, np.linalg.norm(grad), problem.f_true)
        if callback:
            callback(state)
    else:
        state.converged = np.linalg.norm(grad) < gtol
    return state


def synthetic_observations(model: ForwardModel, f_true) -> Observations:
    """Traces produced by the same discretization from ``f_true``."""
    sol = model.solve(f=np.asarray(f_true, dtype=float), g=model.initial_data()[1])
    return Observations.from_solution(sol)
