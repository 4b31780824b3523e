"""Discrete adjoint of the space-time scheme, solved forward in reversed time.

The forward block matrix ``A`` is transposed in the weighted inner product
``W = Ht (x) Hx c^-2``. After the time reversal ``tau = T - t`` the adjoint
reads::

    (Dj~ Di~ (x) I) Lbar + (Dj~ (x) K) Lbar - (I (x) L) Lbar = -(R (x) c^2) grad_J

with the penalized reversed-time operators ``Dk~ = -R Dk^ R``. The
multiplier in forward time is ``Lambda = (R (x) I) Lbar``.

With several time blocks the blocks are visited in reverse order. Each block
receives the transposed interface transfer of the block after it, so the
result is the exact gradient of the discrete multiblock objective.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, UnsupportedPenalty
from .forward import (
    DiscreteSystem,
    ForwardModel,
    PenaltyConfig,
    SpaceGrid,
    WaveProblem,
    assemble_forward,
    make_solver,
)
from .linalg import kron
from .operators import TimeOps, backward_identity


@dataclass(eq=False)
class AdjointSystem:
    """Reversed-time adjoint matrix of one block and its forcing recipe."""

    matrix: sp.csr_matrix
    forward: DiscreteSystem
    time_second: sp.csr_matrix
    time_first: sp.csr_matrix
    stability_proven: bool = True
    _solver: Optional[object] = field(default=None, repr=False)

    @property
    def grid(self) -> SpaceGrid:
        return self.forward.grid

    @property
    def time(self) -> TimeOps:
        return self.forward.time

    @property
    def flavors(self):
        return self.forward.flavors

    @property
    def m(self) -> int:
        return self.time.m

    def forcing(self, grad_j) -> np.ndarray:
        """``-(R (x) c^2) grad_J`` for a gradient given in forward time order."""
        g = _as_block(grad_j, self.m, self.grid.size)
        return -(g[::-1] * self.grid.c2[None, :]).ravel()

    @property
    def solver(self):
        if self._solver is None:
            self._solver = make_solver(self.matrix, self.grid, self.time_second,
                                       self.time_first)
        return self._solver

    def solve_reversed(self, rhs) -> np.ndarray:
        x, _ = self.solver.solve(np.asarray(rhs, dtype=float))
        return x


def _as_block(v, m, n):
    v = np.asarray(v, dtype=float)
    if v.size != m * n:
        raise DimensionMismatch(f"expected {m}x{n} space-time values, got {v.size}")
    return v.reshape(m, n)


def assemble_adjoint(prob: WaveProblem, space, tm: TimeOps,
                     pen: PenaltyConfig = PenaltyConfig(),
                     allow_mixed_flavors: bool = True) -> AdjointSystem:
    """Assemble the reversed-time adjoint of the forward block scheme.

    Only the default initial penalties (``mu1 = mu3 = -1``) and boundary
    penalties are supported. Mismatched time flavors give an exact adjoint
    too, but its energy stability is not established; a warning is issued
    and ``stability_proven`` is False.
    """
    if not (pen.mu1 == -1 and pen.mu3 == -1 and pen.admissible):
        raise UnsupportedPenalty(
            f"adjoint requires mu1 = mu3 = -1 (got mu1={pen.mu1}, mu3={pen.mu3})")
    if not (pen.tau_left == 1 and pen.tau_right == -1):
        raise UnsupportedPenalty("adjoint requires the default boundary penalties")
    fwd = assemble_forward(prob, space, tm, pen)
    proven = tm.flavor_i is tm.flavor_j
    if not proven:
        if not allow_mixed_flavors:
            raise UnsupportedPenalty("adjoint with mismatched time flavors is disabled")
        warnings.warn("adjoint energy stability is unproven for mismatched time flavors",
                      stacklevel=2)
    grid = fwd.grid
    di = tm.reversed(tm.flavor_i)
    dj = tm.reversed(tm.flavor_j)
    second = (dj @ di).tocsr()
    ix = sp.identity(grid.size, format="csr")
    it = sp.identity(tm.m, format="csr")
    a = kron(second, ix) + kron(dj, grid.damping_matrix) - kron(it, grid.stiffness)
    return AdjointSystem(a.tocsr(), fwd, second, dj.tocsr(), proven)


def solve_adjoint(system: AdjointSystem, grad_j) -> np.ndarray:
    """Solve one block for ``Lbar`` (reversed-time order) given ``grad_J`` in forward order."""
    return system.solve_reversed(system.forcing(grad_j))


def to_forward_time(lam_bar, m: int, n_space: int) -> np.ndarray:
    """``(R (x) I) Lbar`` as an ``(m, n_space)`` array."""
    return _as_block(lam_bar, m, n_space)[::-1].copy()


def weighted_transpose(system: AdjointSystem) -> sp.csr_matrix:
    """``(R (x) I) A_adj (R (x) I)``: the forward matrix transposed in the ``W`` inner product."""
    r = kron(backward_identity(system.m), sp.identity(system.grid.size, format="csr"))
    return (r @ system.matrix @ r).tocsr()


def initial_data_pullback(fwd: DiscreteSystem, lam) -> tuple:
    """Transpose of the map ``(f, g) -> rhs`` applied to ``W Lambda``.

    Returns ``(phi, psi)`` such that the Euclidean derivatives of the
    objective with respect to the block's initial data are ``-phi`` and
    ``-psi``.
    """
    grid, tm = fwd.grid, fwd.time
    lam = _as_block(lam, tm.m, grid.size)
    f_plain, f_damp, g_plain = fwd.first_column_vectors()
    wl = lam * (grid.weights / grid.c2)[None, :]
    ht = tm.weights
    phi = (ht * f_plain) @ wl + grid.damping_matrix @ ((ht * f_damp) @ wl)
    psi = (ht * g_plain) @ wl
    return phi, psi


def gradient_wrt_initial(lam, prob: WaveProblem, space, tm: TimeOps,
                         pen: PenaltyConfig = PenaltyConfig()) -> np.ndarray:
    """``Hx``-gradient of the objective with respect to the initial displacement.

    ``lam`` is the forward-time multiplier of the first block.
    """
    fwd = space if isinstance(space, DiscreteSystem) else assemble_forward(prob, space, tm, pen)
    phi, _ = initial_data_pullback(fwd, lam)
    return -phi / fwd.grid.weights


@dataclass
class AdjointField:
    """Multipliers of every block in forward time and the initial-data gradients.

    ``grad_f`` and ``grad_g`` are Euclidean derivatives of the objective
    with respect to the nodal initial displacement and velocity.
    """

    blocks: list
    grad_f: np.ndarray
    grad_g: np.ndarray


def backpropagate(model: ForwardModel, adj: AdjointSystem, grad_blocks) -> AdjointField:
    """Reverse sweep over the blocks of ``model``.

    ``grad_blocks[b]`` is ``grad_J`` of block ``b`` (``(m, n_space)``), the
    objective's gradient in the ``Ht (x) Hx`` inner product.
    """
    fwd = model.system
    tm, grid = fwd.time, fwd.grid
    m, n = tm.m, grid.size
    if len(grad_blocks) != model.n_blocks:
        raise DimensionMismatch("one gradient block per time block required")
    dj_last = tm.derivative(tm.flavor_j).getrow(m - 1).toarray().ravel()
    c2 = grid.c2[None, :]
    lams = [None] * model.n_blocks
    phi = psi = None
    for b in range(model.n_blocks - 1, -1, -1):
        # W^-1 times the right-hand side of A^T W Lambda_b
        rhs = -c2 * _as_block(grad_blocks[b], m, n)
        if phi is not None:
            transfer = np.zeros((m, n))
            transfer[-1] += phi
            transfer += np.outer(dj_last, psi)
            rhs += transfer * (grid.c2 / grid.weights)[None, :] / tm.weights[:, None]
        lam_bar = adj.solve_reversed(rhs[::-1].ravel())
        lams[b] = to_forward_time(lam_bar, m, n)
        phi, psi = initial_data_pullback(fwd, lams[b])
    return AdjointField(lams, -phi, -psi)
