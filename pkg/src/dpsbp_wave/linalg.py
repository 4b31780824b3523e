"""Sparse assembly helpers and the solvers used for the space-time systems.

Matrices are ``scipy.sparse`` CSR matrices. Systems up to
``DIRECT_LIMIT`` unknowns are factorized with SuperLU; larger ones go to
restarted GMRES with a Jacobi preconditioner.

Space-time systems of the form ``T1 (x) I + kappa T2 (x) I - I (x) L``, with
``L`` diagonalizable by a well-conditioned eigenbasis, are also handled by
:class:`SeparableSolver`, which decouples them into one small dense time
system per spatial mode.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DimensionMismatch, DimensionOverflow, NoConvergence, SingularMatrix

DEFAULT_TOL = 1e-11
DIRECT_LIMIT = 50_000
GMRES_RESTART = 50
MAX_INDEX = np.iinfo(np.int32).max


class SolveMethod(enum.Enum):
    DIRECT_LU = "DirectLU"
    GMRES = "GMRES"
    SEPARABLE = "Separable"


@dataclass(frozen=True)
class SolveReport:
    method: SolveMethod
    iterations: int
    relative_residual: float


def as_sparse(a) -> sp.csr_matrix:
    """Convert to CSR with duplicates summed."""
    out = sp.csr_matrix(a, dtype=float)
    out.sum_duplicates()
    return out


def kron(a, b) -> sp.csr_matrix:
    """Kronecker product of two sparse (or dense) matrices."""
    a = sp.csr_matrix(a)
    b = sp.csr_matrix(b)
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if rows > MAX_INDEX or cols > MAX_INDEX or a.nnz * b.nnz > MAX_INDEX:
        raise DimensionOverflow(
            f"kron of {a.shape} and {b.shape} exceeds index range")
    return sp.kron(a, b, format="csr")


def weighted_norm(h, v) -> float:
    """sqrt(v^T H v) for a diagonal H given as a matrix or as its diagonal."""
    w = h.diagonal() if sp.issparse(h) else np.asarray(h, dtype=float)
    if w.ndim == 2:
        w = np.diag(w)
    v = np.asarray(v, dtype=float)
    if w.shape != v.shape:
        raise DimensionMismatch(f"weights {w.shape} vs vector {v.shape}")
    return float(np.sqrt(max(np.dot(w * v, v), 0.0)))


def _relres(a, x, rhs, transpose=False):
    r = (a.T @ x if transpose else a @ x) - rhs
    nb = np.linalg.norm(rhs)
    return float(np.linalg.norm(r) / nb) if nb > 0 else float(np.linalg.norm(r))


class Solver:
    """Reusable solver for one square matrix.

    The LU factorization (or the GMRES preconditioner) is computed once and
    reused for every right-hand side, including transposed solves.
    """

    def __init__(self, a, tol: float = DEFAULT_TOL, direct_limit: int = DIRECT_LIMIT):
        a = as_sparse(a)
        if a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"matrix must be square, got {a.shape}")
        if not tol > 0:
            raise ValueError("tol must be positive")
        self.a = a
        self.tol = tol
        self.method = (SolveMethod.DIRECT_LU if a.shape[0] <= direct_limit
                       else SolveMethod.GMRES)
        self._lu = None
        self._precond = None
        if self.method is SolveMethod.DIRECT_LU:
            try:
                self._lu = spla.splu(a.tocsc())
            except RuntimeError as exc:
                raise SingularMatrix(str(exc)) from exc
        else:
            diag = a.diagonal()
            if np.any(diag == 0):
                diag = np.where(diag == 0, 1.0, diag)
            self._precond = sp.diags(1.0 / diag)

    def solve(self, rhs, transpose: bool = False):
        """Return ``(x, SolveReport)`` for ``A x = rhs`` (or ``A^T x = rhs``)."""
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape != (self.a.shape[0],):
            raise DimensionMismatch(
                f"rhs has shape {rhs.shape}, matrix is {self.a.shape}")
        if not np.any(rhs):
            return np.zeros_like(rhs), SolveReport(self.method, 0, 0.0)
        if self.method is SolveMethod.DIRECT_LU:
            return self._solve_direct(rhs, transpose)
        return self._solve_gmres(rhs, transpose)

    def _solve_direct(self, rhs, transpose):
        trans = "T" if transpose else "N"
        x = self._lu.solve(rhs, trans=trans)
        res = _relres(self.a, x, rhs, transpose)
        steps = 0
        # a couple of refinement sweeps recover digits lost to pivoting
        while res > self.tol and steps < 3:
            r = rhs - (self.a.T @ x if transpose else self.a @ x)
            x = x + self._lu.solve(r, trans=trans)
            res = _relres(self.a, x, rhs, transpose)
            steps += 1
        if not np.all(np.isfinite(x)):
            raise SingularMatrix("direct solve produced non-finite values")
        if res > self.tol:
            raise NoConvergence(
                f"direct solve residual {res:.2e} above tolerance {self.tol:.1e}")
        return x, SolveReport(SolveMethod.DIRECT_LU, steps, res)

    def _solve_gmres(self, rhs, transpose):
        op = self.a.T.tocsr() if transpose else self.a
        count = [0]

        def tick(_):
            count[0] += 1

        x, info = spla.gmres(op, rhs, rtol=self.tol, restart=GMRES_RESTART,
                             maxiter=200, M=self._precond, callback=tick,
                             callback_type="pr_norm")
        res = _relres(op, x, rhs)
        if info != 0 or res > self.tol:
            raise NoConvergence(
                f"GMRES stopped with residual {res:.2e} after {count[0]} iterations")
        return x, SolveReport(SolveMethod.GMRES, count[0], res)


@dataclass(frozen=True)
class AxisModes:
    """Eigen-decomposition ``L = V diag(lam) V^-1`` of one spatial axis operator."""

    eigenvalues: np.ndarray
    vectors: np.ndarray
    inverse: np.ndarray

    @classmethod
    def self_adjoint(cls, op, weights) -> "AxisModes":
        """Modes of an operator that is symmetric in the ``diag(weights)`` inner product."""
        op = op.toarray() if sp.issparse(op) else np.asarray(op, dtype=float)
        root = np.sqrt(np.asarray(weights, dtype=float))
        sym = root[:, None] * op / root[None, :]
        lam, w = np.linalg.eigh(0.5 * (sym + sym.T))
        return cls(lam, w / root[:, None], w.T * root[None, :])


class SeparableSolver:
    """Direct solver for ``A = T1 (x) I + T2 (x) kappa I - I (x) scale * L``.

    ``L`` is the Kronecker sum of the per-axis operators in ``axes``. In the
    eigenbasis of ``L`` the system splits into one ``m x m`` dense system per
    spatial mode. The residual is always checked against the assembled
    matrix ``a``.
    """

    def __init__(self, a, t1, t2, kappa: float, scale: float, axes, tol: float = DEFAULT_TOL):
        self.a = as_sparse(a)
        self.tol = tol
        self.axes = tuple(axes)
        self.shape = tuple(ax.eigenvalues.size for ax in self.axes)
        t1 = t1.toarray() if sp.issparse(t1) else np.asarray(t1)
        t2 = t2.toarray() if sp.issparse(t2) else np.asarray(t2)
        self.m = t1.shape[0]
        lam = self.axes[0].eigenvalues
        for ax in self.axes[1:]:
            lam = np.add.outer(lam, ax.eigenvalues).ravel()
        if self.a.shape[0] != self.m * lam.size:
            raise DimensionMismatch("separable factors do not match the matrix size")
        base = t1 + kappa * t2
        eye = np.eye(self.m)
        self._blocks = base[None, :, :] - (scale * lam)[:, None, None] * eye[None, :, :]
        self.method = SolveMethod.SEPARABLE

    def _to_modes(self, x, inverse=True):
        arr = x.reshape((self.m,) + self.shape)
        for axis, ax in enumerate(self.axes):
            mat = ax.inverse if inverse else ax.vectors
            arr = np.moveaxis(np.tensordot(mat, arr, axes=([1], [axis + 1])), 0, axis + 1)
        return arr.reshape(self.m, -1)

    def solve(self, rhs, transpose: bool = False):
        if transpose:
            raise NotImplementedError("transposed separable solves are not needed")
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape != (self.a.shape[0],):
            raise DimensionMismatch(
                f"rhs has shape {rhs.shape}, matrix is {self.a.shape}")
        if not np.any(rhs):
            return np.zeros_like(rhs), SolveReport(self.method, 0, 0.0)
        modal = self._to_modes(rhs).T  # (modes, m)
        sol = np.linalg.solve(self._blocks, modal[:, :, None])[:, :, 0]
        x = self._to_modes(sol.T.ravel(), inverse=False).ravel()
        res = _relres(self.a, x, rhs)
        if not np.all(np.isfinite(x)):
            raise SingularMatrix("separable solve produced non-finite values")
        if res > self.tol:
            raise NoConvergence(
                f"separable solve residual {res:.2e} above tolerance {self.tol:.1e}")
        return x, SolveReport(self.method, 0, res)


def solve(a, rhs, tol: float = DEFAULT_TOL):
    """One-shot solve of ``a x = rhs``; returns ``(x, SolveReport)``."""
    return Solver(a, tol).solve(rhs)
