"""Regenerate ``src/dpsbp_wave/_tables.py``.

For each order p the boundary closure has b = p rows. The unknowns are the
b x b corner of Q+ = H D+ and the b boundary norm weights. Requiring D+ and
D- to be exact for polynomials up to degree p/2 on the closure rows gives a
linear system that is solved exactly with sympy; what remains is a family
``z = z0 + N t`` with a few free parameters t.

The free parameters are fixed as follows:

* order 2 has none;
* order 4 uses the corner entry Q+[3, 3] = -13/16 (``PINNED``);
* orders 6 and 8 minimize the boundary truncation error of D+ and D- for
  degrees p/2+1 .. p/2+4 in least squares, subject to the dissipation
  condition Q+ + Q+^T - B <= 0 (a small semidefinite program).

Requires sympy and cvxpy (not needed at runtime). Usage::

    python3 tools/derive_upwind_tables.py > src/dpsbp_wave/_tables.py
"""

from __future__ import annotations

import pprint
import sys
from fractions import Fraction

import numpy as np
import sympy

PINNED = {4: {(3, 3): sympy.Rational(-13, 16)}}
TRUNCATION_DEGREES = 4


def interior_stencil(p):
    s = p // 2
    offs = list(range(-(s - 1), s + 2))
    vander = sympy.Matrix([[sympy.Integer(o) ** m for o in offs] for m in range(len(offs))])
    rhs = sympy.zeros(len(offs), 1)
    rhs[1] = 1
    return offs, list(vander.LUsolve(rhs))


def accuracy_system(p):
    """Exact linear system in z = [corner.ravel(), norm] for boundary accuracy."""
    b, s = p, p // 2
    offs, d = interior_stencil(p)
    nz = b * b + b
    n_rows, n_cols = b + s + 3, b + 2 * s + 6
    rows, rhs = [], []

    def q_entry(i, j):
        v = [0] * nz
        if i < b and j < b:
            v[i * b + j] = 1
            return v, 0
        o = j - i
        return v, (d[offs.index(o)] if o in offs else 0)

    for m in range(s + 1):
        for i in range(n_rows):
            dfi = m * sympy.Integer(i) ** (m - 1) if m > 0 else 0
            for transpose in (False, True):
                v, c0 = [0] * nz, sympy.Integer(0)
                sign = -1 if transpose else 1
                for j in range(n_cols):
                    fj = sympy.Integer(j) ** m
                    qv, qc = q_entry(j, i) if transpose else q_entry(i, j)
                    for k in range(nz):
                        v[k] += sign * qv[k] * fj
                    c0 += sign * qc * fj
                if transpose and i == 0:
                    c0 -= sympy.Integer(0) ** m  # boundary term of B - Q^T
                if i < b:
                    v[b * b + i] -= dfi
                else:
                    c0 -= dfi
                rows.append(v)
                rhs.append(-c0)
    return sympy.Matrix(rows), sympy.Matrix(rhs), offs, d


def solution_family(p):
    """Return ``(offs, d, z0, N)`` with every accurate closure equal to z0 + N t."""
    a, r, offs, d = accuracy_system(p)
    reduced, pivots = a.row_join(r).rref()
    nz = a.shape[1]
    free = [k for k in range(nz) if k not in pivots]
    z0 = [sympy.Integer(0)] * nz
    basis = [[sympy.Integer(0)] * len(free) for _ in range(nz)]
    for row, col in enumerate(pivots):
        z0[col] = reduced[row, nz]
        for fi, fc in enumerate(free):
            basis[col][fi] = -reduced[row, fc]
    for fi, fc in enumerate(free):
        basis[fc][fi] = sympy.Integer(1)
    return offs, d, free, z0, basis


def assemble(p, offs, d, z, n):
    b = p
    corner = np.array([float(v) for v in z[: b * b]]).reshape(b, b)
    h = np.array([float(v) for v in z[b * b:]])
    q = np.zeros((n, n))
    for i in range(n):
        for o, c in zip(offs, d):
            if 0 <= i + o < n:
                q[i, i + o] = float(c)
    q[:b, :b] = corner
    bnd = np.zeros((n, n))
    bnd[0, 0], bnd[-1, -1] = -1.0, 1.0
    for i in range(b):
        for j in range(b):
            q[n - 1 - i, n - 1 - j] = q[j, i] - bnd[i, j]
    hv = np.ones(n)
    hv[:b] = h
    hv[n - b:] = h[::-1]
    return q, hv, bnd


def minimize_truncation(p, offs, d, z0, basis):
    import cvxpy as cp

    b, s = p, p // 2
    n = 4 * b + 2 * (s + 2)
    z0f = np.array([float(v) for v in z0])
    nf = np.array([[float(v) for v in row] for row in basis])

    def parts(z):
        q, h, bnd = assemble(p, offs, d, z, n)
        return q / h[:, None], (bnd - q.T) / h[:, None], q + q.T - bnd

    base = parts(z0f)
    dirs = [[a - c for a, c in zip(parts(z0f + nf[:, i]), base)] for i in range(nf.shape[1])]
    x = np.arange(n, dtype=float)
    rows, rhs = [], []
    for m in range(s + 1, s + 1 + TRUNCATION_DEGREES):
        f, df = x**m, m * x ** (m - 1)
        for which in (0, 1):
            rows.append(np.array([(dd[which] @ f)[:b] for dd in dirs]).T)
            rhs.append(-(base[which] @ f - df)[:b])
    a, r = np.vstack(rows), np.concatenate(rhs)
    t = cp.Variable(nf.shape[1])
    dissipation = base[2] + sum(t[i] * dirs[i][2] for i in range(len(dirs)))
    cp.Problem(cp.Minimize(cp.sum_squares(a @ t - r)), [dissipation << 0]).solve(
        solver=cp.CLARABEL)
    return [sympy.Rational(Fraction(repr(float(v)))) for v in t.value]


def derive(p):
    offs, d, free, z0, basis = solution_family(p)
    b = p
    if not free:
        t = []
    elif p in PINNED:
        pins = PINNED[p]
        cols = [i * b + j for (i, j) in pins]
        if sorted(cols) != sorted(free):
            raise RuntimeError(f"pinned entries do not match the free set {free}")
        t = [pins[divmod(c, b)] for c in free]
    else:
        t = minimize_truncation(p, offs, d, z0, basis)
    z = [z0[k] + sum(basis[k][i] * t[i] for i in range(len(t))) for k in range(len(z0))]
    fmt = _format
    return {
        "offsets": offs,
        "interior": [fmt(v) for v in d],
        "norm": [fmt(v) for v in z[b * b:]],
        "corner": [[fmt(z[i * b + j]) for j in range(b)] for i in range(b)],
    }


def _format(v):
    v = sympy.nsimplify(v, rational=True)
    if v.q <= 10**6:
        return str(v)
    return repr(float(v))


HEADER = '''"""Diagonal-norm upwind DP-SBP coefficient tables.

Each entry describes a unit-spacing operator family: the interior stencil of
H D+ (offsets relative to the row index), the left-boundary norm weights and
the top-left corner block of Q+ = H D+. The right boundary and D- follow from
the reflection relation Q-[i, j] = -Q+[n-1-i, n-1-j] and the SBP identity.
Values are exact rationals or full-precision decimals;
``tools/derive_upwind_tables.py`` regenerates them.
"""

'''


def main():
    tables = {p: derive(p) for p in (2, 4, 6, 8)}
    sys.stdout.write(HEADER + "UPWIND_TABLES = " + pprint.pformat(tables, width=88, sort_dicts=False) + "\n")


if __name__ == "__main__":
    main()
