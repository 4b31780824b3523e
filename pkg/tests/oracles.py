"""Independent reference computations used by the tests.

Nothing here calls the package's assembly routines; matrices are rebuilt
densely from the coefficient tables or from first principles.
"""

from fractions import Fraction

import numpy as np

from dpsbp_wave._tables import UPWIND_TABLES


def rational_qplus(order, n):
    """Q+ and the norm weights in exact rational arithmetic (unit spacing)."""
    tab = UPWIND_TABLES[order]
    b = len(tab["norm"])
    q = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for off, c in zip(tab["offsets"], tab["interior"]):
            if 0 <= i + off < n:
                q[i][i + off] = Fraction(c)
    for i in range(b):
        for j in range(b):
            q[i][j] = Fraction(tab["corner"][i][j])
    for i in range(b):
        for j in range(b):
            bij = Fraction(-1) if i == j == 0 else Fraction(0)
            q[n - 1 - i][n - 1 - j] = q[j][i] - bij
    w = [Fraction(1)] * n
    for i, v in enumerate(tab["norm"]):
        w[i] = Fraction(v)
        w[n - 1 - i] = Fraction(v)
    return q, w


def rational_derivative_error(order, n, degree, minus=False):
    """Exact residual of D+ (or D-) applied to x**degree, per row."""
    q, w = rational_qplus(order, n)
    if minus:
        # H D- = B - Q+^T
        qm = [[-q[j][i] for j in range(n)] for i in range(n)]
        qm[0][0] -= 1
        qm[n - 1][n - 1] += 1
        q = qm
    f = [Fraction(i) ** degree for i in range(n)]
    df = [degree * Fraction(i) ** (degree - 1) if degree else Fraction(0) for i in range(n)]
    return [sum(q[i][j] * f[j] for j in range(n)) / w[i] - df[i] for i in range(n)]


def dense_ops(order, n, spacing):
    """Dense D+, D-, H from the tables (float), independent of the package builder."""
    q, w = rational_qplus(order, n)
    qf = np.array([[float(v) for v in row] for row in q])
    wf = np.array([float(v) for v in w]) * spacing
    bnd = np.zeros((n, n))
    bnd[0, 0], bnd[-1, -1] = -1.0, 1.0
    return qf / wf[:, None], (bnd - qf.T) / wf[:, None], wf


def dense_forward_matrix(order, n, m, dx, dt, c, sigma, flavor_i="minus", flavor_j="minus"):
    """1D Neumann space-time matrix with mu = -1, built from penalized time operators."""
    dpx, dmx, hx = dense_ops(order, n, dx)
    dpt, dmt, ht = dense_ops(order, m, dt)

    def pick(fl):
        return dmt if fl == "minus" else 0.5 * (dmt + dpt)

    e11 = np.zeros((m, m))
    e11[0, 0] = 1.0 / ht[0]
    di, dj = pick(flavor_i) + e11, pick(flavor_j) + e11
    dxx = -np.diag(1 / hx) @ dmx.T @ np.diag(hx) @ dmx
    return (np.kron(di @ dj, np.eye(n)) + sigma**2 * np.kron(dj, np.eye(n))
            - c**2 * np.kron(np.eye(m), dxx))


def central_fd(fun, x, direction, step):
    return (fun(x + step * direction) - fun(x - step * direction)) / (2 * step)


def pde_residual(u, dim, c, sigma, points, t, h=1e-3):
    """u_tt + sigma^2 u_t - c^2 Laplace(u) by sixth-order central differences."""
    w2 = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])
    w1 = np.array([-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60])
    offs = np.arange(-3, 4) * h
    coords = list(points)

    def shift(axis, d):
        cs = [x + (d if a == axis else 0.0) for a, x in enumerate(coords)]
        return cs

    utt = sum(wk * u(*coords, t + o) for wk, o in zip(w2, offs)) / h**2
    ut = sum(wk * u(*coords, t + o) for wk, o in zip(w1, offs)) / h
    lap = sum(sum(wk * u(*shift(a, o), t) for wk, o in zip(w2, offs)) / h**2
              for a in range(dim))
    return utt + sigma**2 * ut - c**2 * lap
