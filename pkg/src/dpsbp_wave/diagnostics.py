"""Discrete energies, exact solutions and error measures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, DimensionMismatch
from .forward import (
    PenaltyConfig,
    SolutionField,
    SpaceGrid,
    WaveProblem,
    _sample,
    build_space_grid,
)
from .operators import TimeOps

ENERGY_FLOOR = -1e-12


def _block_array(u, m, n):
    u = np.asarray(u, dtype=float)
    if u.size != m * n:
        raise DimensionMismatch(f"expected {m}x{n} space-time values, got {u.size}")
    return u.reshape(m, n)


def auxiliary_field(u_block, f, tm: TimeOps, mu1: float = -1.0) -> np.ndarray:
    """Penalized time derivative ``V = (Dj (x) I) U - mu1 (H^-1 e1 e1^T (x) I)(U - F)``.

    Returns an ``(m, n_space)`` array.
    """
    f = np.asarray(f, dtype=float)
    u = _block_array(u_block, tm.m, f.size)
    v = tm.derivative(tm.flavor_j) @ u
    v[0] -= mu1 * (u[0] - f) / tm.weights[0]
    return v


@dataclass
class EnergyTrace:
    """Energy at every time node plus the dissipated quantities.

    ``energy[0]`` is the energy of the initial data; the remaining entries
    list every time node of every block in order (an interface time appears
    once per adjacent block). ``damping`` and ``boundary`` are already
    weighted by the time quadrature, so their sums enter the energy balance
    directly.
    """

    energy: np.ndarray
    damping: np.ndarray
    boundary: np.ndarray
    initial: float
    stability_constant: float

    @property
    def final(self) -> float:
        return float(self.energy[-1])

    @property
    def dissipated(self) -> float:
        return float(self.damping.sum() + self.boundary.sum())

    def lemma_gap(self) -> float:
        """``C E_0 - (E_M + sum of dissipated terms)``; nonnegative when the bound holds."""
        return self.stability_constant * self.initial - (self.final + self.dissipated)


def _energy_parts(grid: SpaceGrid, v, u):
    """Kinetic plus potential energy per row of ``v``/``u``."""
    w = grid.weights
    inv_c2 = 1.0 / grid.c2
    kinetic = np.einsum("ks,s,ks->k", v, w * inv_c2, v)
    potential = np.zeros(v.shape[0])
    for dm in grid.d_minus:
        du = (dm @ u.T).T
        potential += np.einsum("ks,s,ks->k", du, w, du)
    return 0.5 * (kinetic + potential)


def energy_trace(sol: SolutionField, prob: WaveProblem, space, tm: TimeOps,
                 pen: PenaltyConfig = PenaltyConfig(), f=None, g=None) -> EnergyTrace:
    """Evaluate the fully discrete energy of ``sol`` block by block.

    ``f`` and ``g`` default to the problem's initial data sampled on the
    grid. Later blocks use the interface data handed over by the previous
    block.
    """
    grid = space if isinstance(space, SpaceGrid) else build_space_grid(prob, space, pen)
    zero = np.zeros(grid.size)
    if f is None:
        f = zero if prob.initial_displacement is None else _sample(prob.initial_displacement,
                                                                   grid.coords)
    if g is None:
        g = zero if prob.initial_velocity is None else _sample(prob.initial_velocity,
                                                               grid.coords)
    f, g = np.asarray(f, dtype=float), np.asarray(g, dtype=float)
    e0 = float(_energy_parts(grid, g[None, :], f[None, :])[0])

    w = grid.weights
    sigma2_over_c2 = grid.sigma2 / grid.c2
    bweight = w / grid.c2 * grid.boundary.diagonal()
    energies, damping, boundary = [], [], []
    for b, u in enumerate(sol.blocks):
        f_b = f if b == 0 else sol.blocks[b - 1][-1]
        v = auxiliary_field(u, f_b, tm, pen.mu1)
        energies.append(_energy_parts(grid, v, u))
        damping.append(tm.weights * np.einsum("ks,s,ks->k", v, w * sigma2_over_c2, v))
        boundary.append(tm.weights * np.einsum("ks,s,ks->k", v, bweight, v))
    return EnergyTrace(np.concatenate([[e0], *energies]), np.concatenate(damping),
                       np.concatenate(boundary), e0, pen.stability_constant())


@dataclass(frozen=True)
class ExactSolution:
    """Standing-wave solution of the damped wave equation with Neumann walls.

    ``u = exp(-sigma^2 t / 2) phi(t) cos(pi x) [cos(pi y)]`` on ``[-1, 1]^dim``.
    """

    dim: int
    c: float
    sigma: float

    @property
    def omega(self) -> float:
        return 4.0 * self.dim * self.c**2 * np.pi**2 - self.sigma**4

    def _zero_branch(self) -> bool:
        s4 = self.sigma**4
        limit = 1e-10 * s4 if s4 > 0 else 1e-12
        return abs(self.omega) < limit

    def phi(self, t):
        t = np.asarray(t, dtype=float)
        om, s2 = self.omega, self.sigma**2
        if self._zero_branch():
            return 1.0 + 0.5 * s2 * t
        if om > 0:
            r = np.sqrt(om)
            return np.cos(0.5 * r * t) + s2 / r * np.sin(0.5 * r * t)
        r = np.sqrt(-om)
        return np.cosh(0.5 * r * t) + s2 / r * np.sinh(0.5 * r * t)

    def __call__(self, *args):
        *coords, t = args
        if len(coords) != self.dim:
            raise DimensionMismatch(f"expected {self.dim} coordinates")
        shape = np.exp(-0.5 * self.sigma**2 * np.asarray(t)) * self.phi(t)
        for x in coords:
            shape = shape * np.cos(np.pi * np.asarray(x))
        return shape


def exact_solution(dim: int, c: float, sigma: float) -> ExactSolution:
    if dim not in (1, 2):
        raise ValueError("dim must be 1 or 2")
    if not c > 0 or sigma < 0:
        raise ValueError("need c > 0 and sigma >= 0")
    return ExactSolution(dim, float(c), float(sigma))


def l2_error(sol: SolutionField, ex: ExactSolution, space=None, at_time=None) -> float:
    """Discrete L2 (H-weighted) error at ``at_time`` (default: the final node)."""
    grid = space if isinstance(space, SpaceGrid) else sol.grid
    if grid is None:
        raise ValueError("a spatial grid is required")
    if at_time is None:
        t = sol.times(len(sol.blocks) - 1)[-1]
        u = sol.final()
    else:
        t = at_time
        u = sol.at_time(at_time)
    if u.size != grid.size:
        raise DimensionMismatch("solution and grid sizes differ")
    e = u - ex(*grid.coords, t)
    return float(np.sqrt(np.dot(grid.weights * e, e)))


def convergence_rate(errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(spacing)``.

    ``errors`` is a sequence of ``(spacing, error)`` pairs.
    """
    pairs = [(float(h), float(e)) for h, e in errors]
    if len(pairs) < 2:
        raise DegenerateInput("need at least two (spacing, error) pairs")
    h = np.array([p[0] for p in pairs])
    e = np.array([p[1] for p in pairs])
    if np.any(h <= 0) or np.any(e <= 0) or not np.all(np.isfinite(e)):
        raise DegenerateInput("spacings and errors must be positive and finite")
    if np.ptp(np.log(h)) == 0:
        raise DegenerateInput("spacings must not all be equal")
    slope, _ = np.polyfit(np.log(h), np.log(e), 1)
    return float(slope)
