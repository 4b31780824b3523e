"""Upwind dual-pairing SBP operators in space and time.

A triplet ``(D-, D+, H)`` on a uniform grid satisfies

* ``H`` diagonal and positive,
* ``H D+ + (D-)^T H = e_N e_N^T - e_1 e_1^T``,
* ``H (D+ - D-)`` symmetric negative semidefinite,
* ``D+`` and ``D-`` exact for polynomials of degree ``order`` away from the
  boundaries (degree ``order // 2`` in the boundary closures).

The same family provides the time derivative operators. ``D-`` (upwind in
time) and the averaged ``D = (D- + D+) / 2`` are the two admissible choices.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from ._tables import UPWIND_TABLES
from .errors import GridTooSmall, UnsupportedOrder

SUPPORTED_ORDERS = (2, 4, 6, 8)

SBP_TOL = 1e-12
EIG_TOL = 1e-10
POLY_TOL = 1e-10


class Flavor(enum.Enum):
    """Selects the time derivative operator D^(k)."""

    MINUS = "minus"
    CENTER = "center"

    @classmethod
    def parse(cls, value) -> "Flavor":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"minus": cls.MINUS, "m": cls.MINUS, "-": cls.MINUS,
                   "center": cls.CENTER, "c": cls.CENTER, "0": cls.CENTER}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown time operator flavor {value!r}") from None


def closure_size(order: int) -> int:
    """Number of boundary rows modified by the closure at each end."""
    _check_order(order)
    return len(UPWIND_TABLES[order]["norm"])


def min_points(order: int) -> int:
    return 2 * closure_size(order) + 1


def _check_order(order):
    if order not in SUPPORTED_ORDERS:
        raise UnsupportedOrder(
            f"order must be one of {SUPPORTED_ORDERS}, got {order!r}")


def _as_floats(values):
    return np.array([float(Fraction(v)) for v in values])


@lru_cache(maxsize=64)
def _unit_qplus(order: int, n: int):
    """Return (Q+, norm weights) for unit spacing, as dense arrays."""
    table = UPWIND_TABLES[order]
    offsets = table["offsets"]
    interior = _as_floats(table["interior"])
    norm = _as_floats(table["norm"])
    corner = np.array([_as_floats(row) for row in table["corner"]])
    b = len(norm)

    q = np.zeros((n, n))
    for off, coef in zip(offsets, interior):
        idx = np.arange(max(0, -off), min(n, n - off))
        q[idx, idx + off] = coef
    q[:b, :b] = corner
    # Right corner from the reflection relation Q+[n-1-i, n-1-j] = Q+[j, i] - B[i, j]
    flipped = corner.T.copy()
    flipped[0, 0] += 1.0
    q[n - b:, n - b:] = flipped[::-1, ::-1]

    w = np.ones(n)
    w[:b] = norm
    w[n - b:] = norm[::-1]
    q.setflags(write=False)
    w.setflags(write=False)
    return q, w


def _boundary_matrix(n):
    return sp.csr_matrix(([-1.0, 1.0], ([0, n - 1], [0, n - 1])), shape=(n, n))


@dataclass(frozen=True, eq=False)
class SbpTriplet:
    """Forward/backward difference pair with its diagonal quadrature."""

    order: int
    n: int
    spacing: float
    d_minus: sp.csr_matrix
    d_plus: sp.csr_matrix
    weights: np.ndarray  # diagonal of H, includes the spacing

    @property
    def h(self) -> sp.dia_matrix:
        return sp.diags(self.weights)

    @property
    def h_inv(self) -> sp.dia_matrix:
        return sp.diags(1.0 / self.weights)

    @property
    def d_center(self) -> sp.csr_matrix:
        return (0.5 * (self.d_minus + self.d_plus)).tocsr()

    @property
    def closure(self) -> int:
        return closure_size(self.order) if self.order in SUPPORTED_ORDERS else 0

    def nodes(self, left: float = 0.0) -> np.ndarray:
        return left + self.spacing * np.arange(self.n)


def build_space_triplet(order: int, n: int, spacing: float) -> SbpTriplet:
    """Construct the order-``order`` upwind DP-SBP triplet on ``n`` points."""
    _check_order(order)
    if n < min_points(order):
        raise GridTooSmall(
            f"order {order} needs at least {min_points(order)} points, got {n}")
    if not spacing > 0:
        raise ValueError(f"spacing must be positive, got {spacing!r}")
    q, w = _unit_qplus(order, n)
    weights = spacing * w
    qm = _boundary_matrix(n).toarray() - q.T
    d_plus = sp.csr_matrix(q / weights[:, None])
    d_minus = sp.csr_matrix(qm / weights[:, None])
    d_plus.eliminate_zeros()
    d_minus.eliminate_zeros()
    return SbpTriplet(order, n, float(spacing), d_minus, d_plus, weights)


@dataclass(frozen=True, eq=False)
class TimeOps:
    """Temporal operator family on one time block."""

    order: int
    m: int
    step: float
    d_minus: sp.csr_matrix
    d_plus: sp.csr_matrix
    weights: np.ndarray
    flavor_i: Flavor = Flavor.MINUS
    flavor_j: Flavor = Flavor.MINUS
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def d_center(self) -> sp.csr_matrix:
        return (0.5 * (self.d_minus + self.d_plus)).tocsr()

    @property
    def h(self) -> sp.dia_matrix:
        return sp.diags(self.weights)

    @property
    def h_inv(self) -> sp.dia_matrix:
        return sp.diags(1.0 / self.weights)

    def derivative(self, flavor) -> sp.csr_matrix:
        flavor = Flavor.parse(flavor)
        return self.d_minus if flavor is Flavor.MINUS else self.d_center

    def penalized(self, flavor) -> sp.csr_matrix:
        return penalized_time_op(self, flavor)

    def adjoint(self, flavor) -> sp.csr_matrix:
        return adjoint_time_op(self, flavor)

    def reversed(self, flavor) -> sp.csr_matrix:
        return reversed_time_op(self, flavor)

    def with_flavors(self, flavor_i, flavor_j) -> "TimeOps":
        return TimeOps(self.order, self.m, self.step, self.d_minus,
                       self.d_plus, self.weights, Flavor.parse(flavor_i),
                       Flavor.parse(flavor_j))


def build_time_ops(order: int, m: int, step: float, flavor_i=Flavor.MINUS,
                   flavor_j=Flavor.MINUS) -> TimeOps:
    """Time operators from the same family as the spatial triplet."""
    tri = build_space_triplet(order, m, step)
    return TimeOps(order, m, tri.spacing, tri.d_minus, tri.d_plus,
                   tri.weights, Flavor.parse(flavor_i), Flavor.parse(flavor_j))


def _first_corner(m, value_at_first):
    return sp.csr_matrix(([value_at_first], ([0], [0])), shape=(m, m))


def penalized_time_op(t: TimeOps, flavor) -> sp.csr_matrix:
    """D~ = D^(k) + H^-1 e_1 e_1^T."""
    key = ("pen", Flavor.parse(flavor))
    if key not in t._cache:
        op = t.derivative(flavor) + _first_corner(t.m, 1.0 / t.weights[0])
        t._cache[key] = op.tocsr()
    return t._cache[key]


def adjoint_time_op(t: TimeOps, flavor) -> sp.csr_matrix:
    """D^ such that H D~ = -(D^)^T H.

    For the upwind flavor the adjoint is built from D+, for the centered one
    from D itself; both carry the rank-one correction -H^-1 e_M e_M^T.
    """
    flavor = Flavor.parse(flavor)
    key = ("adj", flavor)
    if key not in t._cache:
        base = t.d_plus if flavor is Flavor.MINUS else t.d_center
        last = sp.csr_matrix(([1.0 / t.weights[-1]], ([t.m - 1], [t.m - 1])),
                             shape=(t.m, t.m))
        t._cache[key] = (base - last).tocsr()
    return t._cache[key]


def backward_identity(m: int) -> sp.csr_matrix:
    """The index-reversal matrix R."""
    return sp.csr_matrix((np.ones(m), (np.arange(m), np.arange(m)[::-1])),
                         shape=(m, m))


def reversed_time_op(t: TimeOps, flavor) -> sp.csr_matrix:
    """Penalized operator in reversed time: -R D^ R."""
    key = ("rev", Flavor.parse(flavor))
    if key not in t._cache:
        r = backward_identity(t.m)
        t._cache[key] = (-(r @ adjoint_time_op(t, flavor) @ r)).tocsr()
    return t._cache[key]


# --- certification -----------------------------------------------------------


@dataclass
class AssumptionReport:
    """Residuals of the framework assumptions; failures are recorded, never raised."""

    passed: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def record(self, name, residual, ok):
        self.residuals[name] = float(residual)
        self.passed[name] = bool(ok)

    def summary_lines(self):
        for name in self.passed:
            flag = "PASS" if self.passed[name] else "FAIL"
            yield f"{name:<22s} {flag}  residual={self.residuals[name]:.3e}"


def _poly_errors(d, x, degree, rows):
    """Max relative error of ``d`` applied to monomials up to ``degree``."""
    errs = []
    center = 0.5 * (x[0] + x[-1])
    half = max(0.5 * (x[-1] - x[0]), 1e-300)
    xs = (x - center) / half
    for k in range(degree + 1):
        f = xs**k
        df = k * xs ** (k - 1) / half if k > 0 else np.zeros_like(xs)
        err = np.abs(d @ f - df)[rows]
        scale = max(1.0, np.abs(df).max(), np.abs(f).max() / half)
        errs.append(err.max(initial=0.0) / scale)
    return errs


def _exact_degree(errs, tol):
    degree = -1
    for k, e in enumerate(errs):
        if e > tol:
            break
        degree = k
    return degree


def _sym_eigs(a):
    a = np.asarray(a.todense() if sp.issparse(a) else a)
    return np.linalg.eigvalsh(0.5 * (a + a.T)), np.abs(a).max(initial=0.0)


def verify_space(t: SbpTriplet) -> AssumptionReport:
    rep = AssumptionReport()
    n = t.n
    w = np.asarray(t.weights, dtype=float)
    rep.record("A1_positive_norm", max(0.0, -w.min()), bool(np.all(w > 0)))

    h = sp.diags(w)
    b = _boundary_matrix(n)
    sbp = (h @ t.d_plus + t.d_minus.T @ h - b).toarray()
    scale = max(1.0, 1.0 / t.spacing)
    res = np.abs(sbp).max(initial=0.0)
    rep.record("A3_sbp_identity", res, res <= SBP_TOL * scale)

    eigs, mag = _sym_eigs(h @ (t.d_plus - t.d_minus))
    top = max(eigs.max(), 0.0)
    rep.record("A4_dissipation", top, top <= EIG_TOL * max(mag, 1.0))
    rep.info["A4_min_eigenvalue"] = float(eigs.min())

    x = t.nodes()
    closure = t.closure
    interior = np.arange(closure, n - closure)
    boundary = np.r_[np.arange(min(closure, n)), np.arange(max(n - closure, 0), n)]
    errs = [max(a, c) for a, c in zip(_poly_errors(t.d_plus, x, t.order, interior),
                                      _poly_errors(t.d_minus, x, t.order, interior))]
    rep.record("A2_interior_exactness", max(errs), max(errs) <= POLY_TOL)

    berrs = [max(a, c) for a, c in zip(_poly_errors(t.d_plus, x, t.order, boundary),
                                       _poly_errors(t.d_minus, x, t.order, boundary))]
    bdeg = _exact_degree(berrs, POLY_TOL)
    rep.info["boundary_degree"] = bdeg
    rep.info["boundary_residual"] = float(max(berrs))
    need = t.order // 2

    # quadrature exactness for the polynomials the closure integrates exactly
    qdeg = max(2 * need - 1, 0)
    xs = x - 0.5 * (x[0] + x[-1])
    half = 0.5 * (x[-1] - x[0])
    qerr = 0.0
    for k in range(qdeg + 1):
        exact = 0.0 if k % 2 else 2.0 * half ** (k + 1) / (k + 1)
        qerr = max(qerr, abs(w @ xs**k - exact) / max(1.0, half ** (k + 1)))
    rep.record("A1_quadrature", qerr, qerr <= POLY_TOL)
    rep.info["quadrature_degree"] = qdeg
    return rep


def verify_time(t: TimeOps) -> AssumptionReport:
    rep = AssumptionReport()
    w = np.asarray(t.weights, dtype=float)
    rep.record("A1_positive_norm", max(0.0, -w.min()), bool(np.all(w > 0)))
    h = sp.diags(w)
    half_b = 0.5 * _boundary_matrix(t.m)
    ones = np.ones(t.m)
    seen = []
    for label, flavor in (("i", t.flavor_i), ("j", t.flavor_j)):
        if flavor in seen:
            continue
        seen.append(flavor)
        d = t.derivative(flavor)
        q = h @ d - half_b
        eigs, mag = _sym_eigs(q + q.T)
        floor = EIG_TOL * max(mag, 1.0)
        name = f"B1_{flavor.value}"
        rep.record(name, max(-eigs.min(), 0.0), eigs.min() >= -floor)
        rep.info[f"{name}_min_eigenvalue"] = float(eigs.min())
        rep.info[f"{name}_max_eigenvalue"] = float(eigs.max())
        if flavor is Flavor.CENTER:
            spread = np.abs(eigs).max()
            rep.record("B1_center_neutral", spread, spread <= floor)
        res = np.abs(d @ ones).max()
        rep.record(f"constants_{flavor.value}", res, res <= POLY_TOL * max(1.0, 1.0 / t.step))
    return rep
