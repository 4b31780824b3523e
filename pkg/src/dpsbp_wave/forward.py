"""Space-time assembly and solution of the damped wave equation.

The unknown on one time block is the space-time vector ``U`` with time as
the slow index: entry ``k * n_space + s`` holds the value at time node ``k``
and spatial node ``s``. In two dimensions spatial nodes are ordered
``ix * ny + iy``.

For a block with ``m`` time points the scheme reads::

    (Di Dj (x) I) U + (Dj (x) K) U - (I (x) L) U = SAT + S

with ``K = sigma^2 + B`` (damping plus boundary damping) and ``L`` the
penalized spatial operator ``c^2 Dxx``. The initial data enter through
four penalty terms on the first time row.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .errors import (
    DimensionMismatch,
    InadmissiblePenalty,
    InadmissibleProblem,
    ZeroAlpha,
)
from .linalg import DEFAULT_TOL, AxisModes, SeparableSolver, Solver, kron
from .operators import SbpTriplet, TimeOps, build_space_triplet, build_time_ops

# --- problem description -------------------------------------------------------


@dataclass(frozen=True)
class BoundaryParams:
    """Robin coefficients ``alpha u_x + beta u_t = b`` on the two faces of one axis."""

    alpha_left: float = 1.0
    beta_left: float = 0.0
    alpha_right: float = 1.0
    beta_right: float = 0.0

    def diagnostics(self, axis_name: str = "x") -> list:
        out = []
        al, bl, ar, br = self.alpha_left, self.beta_left, self.alpha_right, self.beta_right
        if al == 0 and bl == 0:
            out.append(f"{axis_name}: alpha_left^2 + beta_left^2 must be nonzero")
        if ar == 0 and br == 0:
            out.append(f"{axis_name}: alpha_right^2 + beta_right^2 must be nonzero")
        if al * bl > 0:
            out.append(f"{axis_name}: alpha_left * beta_left <= 0 violated "
                       f"({al} * {bl} > 0)")
        if ar * br < 0:
            out.append(f"{axis_name}: alpha_right * beta_right >= 0 violated "
                       f"({ar} * {br} < 0)")
        if al == 0:
            out.append(f"{axis_name}: alpha_left must be nonzero")
        if ar == 0:
            out.append(f"{axis_name}: alpha_right must be nonzero")
        return out


@dataclass
class WaveProblem:
    """Damped wave equation ``u_tt + sigma^2 u_t = c^2 Laplace(u) + S``.

    Coefficients may be constants or callables of the spatial coordinates.
    ``boundary_data[axis]`` is a pair ``(b_left, b_right)`` of callables of
    ``t`` (1D) or ``(t, s)`` with ``s`` the transverse coordinate (2D).
    ``source`` takes the spatial coordinates followed by ``t``.
    """

    dim: int = 1
    domain: tuple = ((-1.0, 1.0),)
    final_time: float = 2.0
    wave_speed: object = 1.0
    damping: object = 0.0
    boundary: tuple = (BoundaryParams(),)
    boundary_data: tuple = ()
    source: Optional[Callable] = None
    initial_displacement: Optional[Callable] = None
    initial_velocity: Optional[Callable] = None

    def __post_init__(self):
        self.domain = tuple(tuple(map(float, d)) for d in self.domain)
        if len(self.domain) == 1 and self.dim == 2:
            self.domain = self.domain * 2
        if len(self.boundary) == 1 and self.dim == 2:
            self.boundary = tuple(self.boundary) * 2
        self.boundary = tuple(self.boundary)

    def diagnostics(self) -> list:
        """Every violated admissibility condition, as readable strings."""
        out = []
        if self.dim not in (1, 2):
            out.append(f"dim must be 1 or 2, got {self.dim}")
            return out
        if len(self.domain) != self.dim:
            out.append(f"domain needs {self.dim} intervals")
        for lo, hi in self.domain:
            if not hi > lo:
                out.append(f"empty interval [{lo}, {hi}]")
        if not self.final_time > 0:
            out.append("final_time must be positive")
        if len(self.boundary) != self.dim:
            out.append(f"boundary needs {self.dim} parameter sets")
        for name, bp in zip("xy", self.boundary):
            out.extend(bp.diagnostics(name))
        if self.boundary_data and len(self.boundary_data) != self.dim:
            out.append(f"boundary_data needs {self.dim} pairs")
        return out

    def validate(self):
        problems = self.diagnostics()
        if not problems:
            return
        if any(bp.alpha_left == 0 or bp.alpha_right == 0 for bp in self.boundary):
            raise ZeroAlpha("; ".join(problems))
        raise InadmissibleProblem("; ".join(problems))


@dataclass(frozen=True)
class PenaltyConfig:
    """Boundary (tau) and initial-condition (mu) penalty parameters."""

    tau_left: float = 1.0
    tau_right: float = -1.0
    mu1: float = -1.0
    mu2: float = -1.0
    mu3: float = -1.0
    mu4: float = -1.0

    @classmethod
    def from_mu(cls, mu1: float, mu3: float, **kw) -> "PenaltyConfig":
        """Stable family: ``mu2 = mu1`` and ``mu4 = -mu1 * mu3``."""
        return cls(mu1=mu1, mu2=mu1, mu3=mu3, mu4=-mu1 * mu3, **kw)

    def diagnostics(self) -> list:
        out = []
        if not self.mu1 < -0.5:
            out.append(f"mu1 < -1/2 violated (mu1={self.mu1})")
        if not self.mu3 < -0.5:
            out.append(f"mu3 < -1/2 violated (mu3={self.mu3})")
        if self.mu2 != self.mu1:
            out.append(f"mu2 = mu1 violated (mu2={self.mu2}, mu1={self.mu1})")
        if not np.isclose(self.mu4, -self.mu1 * self.mu3, rtol=1e-14, atol=0):
            out.append(f"mu4 = -mu1*mu3 violated (mu4={self.mu4})")
        return out

    @property
    def admissible(self) -> bool:
        return not self.diagnostics()

    @property
    def is_default(self) -> bool:
        return (self.mu1 == -1 and self.mu3 == -1 and self.mu2 == -1
                and self.mu4 == -1 and self.tau_left == 1 and self.tau_right == -1)

    def stability_constant(self) -> float:
        """Energy growth bound ``max(-mu1^2/(2 mu1+1), -mu3^2/(2 mu3+1))``."""
        return max(-self.mu1**2 / (2 * self.mu1 + 1), -self.mu3**2 / (2 * self.mu3 + 1))


# --- spatial discretization ----------------------------------------------------


def _sample(value, coords):
    if callable(value):
        out = np.asarray(value(*coords), dtype=float)
        return np.broadcast_to(out, coords[0].shape).astype(float)
    return np.full(coords[0].shape, float(value))


def axis_points(interval, spacing):
    """Number of nodes for ``interval`` at ``spacing``; must divide evenly."""
    lo, hi = interval
    cells = (hi - lo) / spacing
    n = int(round(cells))
    if abs(cells - n) > 1e-9 * max(1.0, cells):
        raise DimensionMismatch(
            f"spacing {spacing} does not divide [{lo}, {hi}] evenly")
    return n + 1


def assemble_dxx(tri: SbpTriplet) -> sp.csr_matrix:
    """Self-adjoint second derivative ``-H^-1 (D-)^T H D-`` with Neumann SAT folded in."""
    h = sp.diags(tri.weights)
    return (-(tri.h_inv @ tri.d_minus.T @ h @ tri.d_minus)).tocsr()


def _penalized_second_derivative(tri, pen):
    if pen.tau_left == 1 and pen.tau_right == -1:
        return assemble_dxx(tri)
    n = tri.n
    corners = sp.csr_matrix(([pen.tau_left, pen.tau_right], ([0, n - 1], [0, n - 1])),
                            shape=(n, n))
    return (tri.d_plus @ tri.d_minus + tri.h_inv @ corners @ tri.d_minus).tocsr()


def _face_weights(tri, bp: BoundaryParams, pen: PenaltyConfig):
    """Diagonal of the per-axis boundary damping (without c^2)."""
    if bp.alpha_left == 0 or bp.alpha_right == 0:
        raise ZeroAlpha("boundary closures need nonzero alpha on both faces")
    w = np.zeros(tri.n)
    w[0] -= pen.tau_left * bp.beta_left / bp.alpha_left / tri.weights[0]
    w[-1] -= pen.tau_right * bp.beta_right / bp.alpha_right / tri.weights[-1]
    return w


@dataclass(frozen=True, eq=False)
class SpaceGrid:
    """Tensor-product spatial discretization with sampled coefficients."""

    axes: tuple
    coords: tuple  # flattened node coordinates per axis
    weights: np.ndarray  # diagonal of Hx (Hx (x) Hy in 2D)
    c2: np.ndarray
    sigma2: np.ndarray
    laplacian: sp.csr_matrix  # penalized, without c^2
    boundary: sp.dia_matrix  # B, includes c^2
    d_minus: tuple  # per-axis D- lifted to the full grid
    penalty: PenaltyConfig

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return tuple(t.n for t in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def spacing(self) -> tuple:
        return tuple(t.spacing for t in self.axes)

    @property
    def stiffness(self) -> sp.csr_matrix:
        """``L = c^2 Dxx``."""
        return (sp.diags(self.c2) @ self.laplacian).tocsr()

    @property
    def damping_matrix(self) -> sp.dia_matrix:
        """``K = sigma^2 + B``."""
        return sp.diags(self.sigma2 + self.boundary.diagonal())

    @property
    def separable(self) -> bool:
        """True when ``K`` is a scalar and ``L`` a scaled self-adjoint Kronecker sum."""
        return (np.ptp(self.c2) == 0 and np.ptp(self.sigma2) == 0
                and not np.any(self.boundary.diagonal())
                and self.penalty.tau_left == 1 and self.penalty.tau_right == -1)

    def axis_modes(self):
        return tuple(AxisModes.self_adjoint(assemble_dxx(t), t.weights) for t in self.axes)

    def boundary_nodes(self):
        """Boundary ring as ``(face_index, node_index, arc_weight)`` arrays.

        Faces are numbered left/right per axis (0: x-left, 1: x-right, 2:
        y-left, 3: y-right). The arc weight is the transverse quadrature
        weight (1 in one dimension).
        """
        faces, nodes, arcs = [], [], []
        idx = np.arange(self.size).reshape(self.shape)
        for axis, tri in enumerate(self.axes):
            for side, pos in ((0, 0), (1, tri.n - 1)):
                sl = np.take(idx, pos, axis=axis).ravel()
                if self.dim == 1:
                    arc = np.ones(1)
                else:
                    other = self.axes[1 - axis]
                    arc = other.weights.copy()
                faces.append(np.full(sl.size, 2 * axis + side))
                nodes.append(sl)
                arcs.append(arc)
        return np.concatenate(faces), np.concatenate(nodes), np.concatenate(arcs)


def build_space_grid(prob: WaveProblem, axes, pen: PenaltyConfig = PenaltyConfig()) -> SpaceGrid:
    """Assemble spatial operators for ``prob`` from one triplet per axis."""
    if isinstance(axes, SbpTriplet):
        axes = (axes,) * prob.dim
    axes = tuple(axes)
    if len(axes) != prob.dim:
        raise DimensionMismatch(f"need {prob.dim} triplets, got {len(axes)}")
    prob.validate()
    for tri, (lo, hi) in zip(axes, prob.domain):
        if abs(tri.spacing * (tri.n - 1) - (hi - lo)) > 1e-9 * (hi - lo):
            raise DimensionMismatch(
                f"triplet covers length {tri.spacing * (tri.n - 1)}, domain is {hi - lo}")
    grids = np.meshgrid(*[t.nodes(lo) for t, (lo, _) in zip(axes, prob.domain)],
                        indexing="ij")
    coords = tuple(g.ravel() for g in grids)
    weights = axes[0].weights
    for t in axes[1:]:
        weights = np.kron(weights, t.weights)

    c = _sample(prob.wave_speed, coords)
    if np.any(c == 0) or not np.all(np.isfinite(c)):
        raise InadmissibleProblem("wave speed must be nonzero and finite everywhere")
    c2 = c**2
    sigma2 = _sample(prob.damping, coords) ** 2

    lap_terms, bdiag, dms = [], np.zeros(c.size), []
    for axis, (tri, bp) in enumerate(zip(axes, prob.boundary)):
        left = sp.identity(int(np.prod([t.n for t in axes[:axis]])), format="csr")
        right = sp.identity(int(np.prod([t.n for t in axes[axis + 1:]])), format="csr")

        def lift(op):
            return kron(kron(left, op), right)

        lap_terms.append(lift(_penalized_second_derivative(tri, pen)))
        bdiag += lift(sp.diags(_face_weights(tri, bp, pen))).diagonal()
        dms.append(lift(tri.d_minus))
    laplacian = lap_terms[0]
    for term in lap_terms[1:]:
        laplacian = laplacian + term
    return SpaceGrid(axes, coords, weights, c2, sigma2, laplacian.tocsr(),
                     sp.diags(c2 * bdiag), tuple(dms), pen)


def assemble_boundary_matrix(tri, prob: WaveProblem, pen: PenaltyConfig = PenaltyConfig()):
    """Boundary damping ``B``: nonzero only on boundary nodes, scaled by ``c^2``."""
    return build_space_grid(prob, tri, pen).boundary


def _boundary_forcing(grid: SpaceGrid, prob: WaveProblem, t: float) -> np.ndarray:
    """Data part of the boundary SATs at time ``t``."""
    out = np.zeros(grid.size)
    if not prob.boundary_data:
        return out
    pen = grid.penalty
    idx = np.arange(grid.size).reshape(grid.shape)
    for axis, (tri, bp, data) in enumerate(zip(grid.axes, prob.boundary, prob.boundary_data)):
        if data is None:
            continue
        for side, (func, tau, alpha, pos) in enumerate((
                (data[0], pen.tau_left, bp.alpha_left, 0),
                (data[1], pen.tau_right, bp.alpha_right, tri.n - 1))):
            if func is None:
                continue
            nodes = np.take(idx, pos, axis=axis).ravel()
            if grid.dim == 1:
                vals = np.atleast_1d(np.asarray(func(t), dtype=float))
            else:
                s = grid.coords[1 - axis][nodes]
                vals = np.broadcast_to(np.asarray(func(t, s), dtype=float), s.shape)
            out[nodes] -= tau * grid.c2[nodes] * vals / (alpha * tri.weights[pos])
    return out


def sample_source(prob: WaveProblem, grid: SpaceGrid, times) -> np.ndarray:
    """Source plus boundary-data forcing sampled at every space-time node."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.zeros((times.size, grid.size))
    for k, t in enumerate(times):
        if prob.source is not None:
            out[k] = _sample(lambda *x: prob.source(*x, t), grid.coords)
        out[k] += _boundary_forcing(grid, prob, t)
    return out.ravel()


# --- space-time system ---------------------------------------------------------


@dataclass(eq=False)
class DiscreteSystem:
    """Assembled block operator and the recipe for its right-hand side."""

    matrix: sp.csr_matrix
    grid: SpaceGrid
    time: TimeOps
    penalty: PenaltyConfig
    problem: WaveProblem
    time_second: Optional[sp.csr_matrix] = None  # multiplies I
    time_first: Optional[sp.csr_matrix] = None  # multiplies K
    _solver: Optional[object] = field(default=None, repr=False)

    @property
    def m(self) -> int:
        return self.time.m

    @property
    def n_space(self) -> int:
        return self.grid.size

    @property
    def flavors(self):
        return self.time.flavor_i, self.time.flavor_j

    def first_column_vectors(self):
        """Time vectors multiplying f, sigma^2+B f and g in the initial SATs."""
        tm, pen = self.time, self.penalty
        e1h = np.zeros(tm.m)
        e1h[0] = 1.0 / tm.weights[0]
        di = tm.derivative(tm.flavor_i)
        f_plain = -pen.mu2 * (di @ e1h) - pen.mu4 * e1h / tm.weights[0]
        f_damp = -pen.mu1 * e1h
        g_plain = -pen.mu3 * e1h
        return f_plain, f_damp, g_plain

    def rhs(self, f, g, source: Optional[np.ndarray] = None) -> np.ndarray:
        """Right-hand side from initial (or interface) data and sampled forcing."""
        f = np.asarray(f, dtype=float)
        g = np.asarray(g, dtype=float)
        if f.shape != (self.n_space,) or g.shape != (self.n_space,):
            raise DimensionMismatch("initial data must have one value per spatial node")
        f_plain, f_damp, g_plain = self.first_column_vectors()
        out = (np.kron(f_plain, f) + np.kron(f_damp, self.grid.damping_matrix @ f)
               + np.kron(g_plain, g))
        if source is not None:
            source = np.asarray(source, dtype=float)
            if source.shape != out.shape:
                raise DimensionMismatch(f"source has shape {source.shape}, expected {out.shape}")
            out = out + source
        return out

    @property
    def solver(self):
        if self._solver is None:
            self._solver = make_solver(self.matrix, self.grid, self.time_second,
                                       self.time_first)
        return self._solver

    def solve(self, rhs) -> np.ndarray:
        x, _ = self.solver.solve(rhs)
        return x


def assemble_forward(prob: WaveProblem, space, tm: TimeOps,
                     pen: PenaltyConfig = PenaltyConfig()) -> DiscreteSystem:
    """Build the space-time matrix for one block of ``tm.m`` time points."""
    bad = pen.diagnostics()
    if bad:
        raise InadmissiblePenalty("; ".join(bad))
    grid = space if isinstance(space, SpaceGrid) else build_space_grid(prob, space, pen)
    if grid.penalty != pen:
        grid = build_space_grid(prob, grid.axes, pen)
    m = tm.m
    it = sp.identity(m, format="csr")
    ix = sp.identity(grid.size, format="csr")
    di = tm.derivative(tm.flavor_i)
    dj = tm.derivative(tm.flavor_j)
    p = sp.csr_matrix(([1.0 / tm.weights[0]], ([0], [0])), shape=(m, m))
    k_mat = grid.damping_matrix
    time_part = (di @ dj - pen.mu2 * (di @ p) - pen.mu3 * (p @ dj) - pen.mu4 * (p @ p))
    first = (dj - pen.mu1 * p).tocsr()
    a = kron(time_part, ix) + kron(first, k_mat) - kron(it, grid.stiffness)
    return DiscreteSystem(a.tocsr(), grid, tm, pen, prob, time_part.tocsr(), first)


def make_solver(matrix, grid: SpaceGrid, time_second, time_first, tol: float = DEFAULT_TOL):
    """Pick the mode-decoupled solver when the coefficients allow it."""
    if time_second is not None and grid.separable:
        return SeparableSolver(matrix, time_second, time_first, float(grid.sigma2[0]),
                               float(grid.c2[0]), grid.axis_modes(), tol)
    return Solver(matrix, tol)


# --- marching ------------------------------------------------------------------


@dataclass
class SolutionField:
    """Space-time solution stored block by block.

    ``blocks[b]`` has shape ``(m, n_space)``; consecutive blocks share their
    interface time node.
    """

    blocks: list
    offsets: list
    step: float
    grid: Optional[SpaceGrid] = None

    def __post_init__(self):
        if len(self.blocks) != len(self.offsets):
            raise DimensionMismatch("one offset per block required")
        if any(b.shape[1] != self.blocks[0].shape[1] for b in self.blocks):
            raise DimensionMismatch("blocks must share the spatial grid")
        if any(b <= a for a, b in zip(self.offsets, self.offsets[1:])):
            raise ValueError("block offsets must be strictly increasing")

    @property
    def m(self) -> int:
        return self.blocks[0].shape[0]

    def times(self, block: int) -> np.ndarray:
        return self.offsets[block] + self.step * np.arange(self.blocks[block].shape[0])

    def final(self) -> np.ndarray:
        return self.blocks[-1][-1]

    def at_time(self, t: float, atol: float = 1e-9) -> np.ndarray:
        for b in range(len(self.blocks) - 1, -1, -1):
            k = np.nonzero(np.abs(self.times(b) - t) < atol)[0]
            if k.size:
                return self.blocks[b][k[0]]
        raise ValueError(f"time {t} is not a grid time")

    def stacked(self) -> np.ndarray:
        """All time slices, interface nodes kept once."""
        parts = [self.blocks[0]] + [b[1:] for b in self.blocks[1:]]
        return np.vstack(parts)


def block_points(total_points: int, n_blocks: int) -> int:
    """Points per block when ``total_points`` are split into equal blocks."""
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    if (total_points - 1) % n_blocks:
        raise DimensionMismatch(
            f"{total_points} time points cannot be split into {n_blocks} equal blocks")
    return (total_points - 1) // n_blocks + 1


def build_problem_operators(prob: WaveProblem, order: int, spacing: float, *,
                            time_step: Optional[float] = None, n_blocks: int = 1,
                            flavor_i="minus", flavor_j="minus"):
    """Convenience: spatial triplets and per-block time operators for ``prob``."""
    dt = spacing if time_step is None else time_step
    axes = tuple(build_space_triplet(order, axis_points(iv, spacing), spacing)
                 for iv in prob.domain)
    total = axis_points((0.0, prob.final_time), dt)
    m = block_points(total, n_blocks)
    tm = build_time_ops(order, m, dt, flavor_i, flavor_j)
    return axes, tm


class ForwardModel:
    """Forward solver for a fixed problem, grid and block layout.

    The block matrix is assembled and factorized once; every block and every
    call to :meth:`solve` reuses it.
    """

    def __init__(self, prob: WaveProblem, space, tm: TimeOps,
                 pen: PenaltyConfig = PenaltyConfig(), n_blocks: int = 1):
        if n_blocks < 1:
            raise ValueError("n_blocks must be >= 1")
        if abs(n_blocks * (tm.m - 1) * tm.step - prob.final_time) > 1e-9 * prob.final_time:
            raise DimensionMismatch(
                f"{n_blocks} blocks of {tm.m} points at step {tm.step} do not reach "
                f"final time {prob.final_time}")
        self.problem = prob
        self.system = assemble_forward(prob, space, tm, pen)
        self.grid = self.system.grid
        self.time = tm
        self.penalty = pen
        self.n_blocks = n_blocks
        self.offsets = [b * (tm.m - 1) * tm.step for b in range(n_blocks)]
        self._sources = None

    def initial_data(self):
        prob, coords = self.problem, self.grid.coords
        f = (_sample(prob.initial_displacement, coords)
             if prob.initial_displacement is not None else np.zeros(self.grid.size))
        g = (_sample(prob.initial_velocity, coords)
             if prob.initial_velocity is not None else np.zeros(self.grid.size))
        return f, g

    def sources(self):
        if self._sources is None:
            tm = self.time
            has_forcing = self.problem.source is not None or any(
                d is not None and any(x is not None for x in d)
                for d in self.problem.boundary_data)
            self._sources = [
                sample_source(self.problem, self.grid, off + tm.step * np.arange(tm.m))
                if has_forcing else None
                for off in self.offsets]
        return self._sources

    def interface_data(self, u_block: np.ndarray):
        """``(f, g)`` handed to the next block from the final row of ``u_block``."""
        tm = self.time
        dj = tm.derivative(tm.flavor_j)
        return u_block[-1].copy(), np.asarray(dj.getrow(tm.m - 1) @ u_block).ravel()

    def solve(self, f=None, g=None) -> SolutionField:
        if f is None or g is None:
            f0, g0 = self.initial_data()
            f = f0 if f is None else f
            g = g0 if g is None else g
        m, n = self.time.m, self.grid.size
        blocks = []
        for b, src in enumerate(self.sources()):
            if b > 0:
                f, g = self.interface_data(blocks[-1])
            u = self.system.solve(self.system.rhs(f, g, src))
            blocks.append(u.reshape(m, n))
        return SolutionField(blocks, list(self.offsets), self.time.step, self.grid)


def march_multiblock(prob: WaveProblem, space, tm: TimeOps,
                     pen: PenaltyConfig = PenaltyConfig(), n_blocks: int = 1) -> SolutionField:
    """Solve block by block; each block starts from the previous block's final state."""
    return ForwardModel(prob, space, tm, pen, n_blocks).solve()
