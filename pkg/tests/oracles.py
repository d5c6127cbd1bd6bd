"""Independent oracles the tests check the engine against.

Everything here deliberately avoids the engine's own code paths: dense
matrices are assembled by Kronecker products from the stencil definition,
the single-cell step is written as three scalar recursions with a
root-finder from scipy, and the quartic transition is re-derived from the
raw 5x5 monomial Hermite system.
"""

import math

import numpy as np
from scipy.optimize import brentq


def dense_zero_flux(grid):
    """Kron-assembled dense matrix of the zero-flux stencil."""
    mats = []
    for n, h in zip(grid.cells, grid.spacing):
        T = np.zeros((n, n))
        for i in range(n):
            if i > 0:
                T[i, i] += 1.0 / h**2
                T[i, i - 1] -= 1.0 / h**2
            if i < n - 1:
                T[i, i] += 1.0 / h**2
                T[i, i + 1] -= 1.0 / h**2
        mats.append(T)
    A = np.zeros((grid.n_cells,) * 2)
    for axis, T in enumerate(mats):
        ops = [np.eye(n) for n in grid.cells]
        ops[axis] = T
        M = ops[0]
        for o in ops[1:]:
            M = np.kron(M, o)
        A += M
    return A


def dense_robin(grid, gamma):
    w = gamma * grid.boundary_face_weight() / grid.cell_volume
    return dense_zero_flux(grid) + np.diag(w.ravel())


def hermite_blend_monomial(c1, c2, ts, tss):
    """Monomial coefficients of the unique quartic matching the warm
    branch value/slope/curvature at ts and zero slope/curvature at tss,
    from the raw 5x5 linear system."""
    def deriv_row(z, order):
        row = []
        for k in range(5):
            if k < order:
                row.append(0.0)
            else:
                c = 1.0
                for j in range(order):
                    c *= (k - j)
                row.append(c * z ** (k - order))
        return row

    rows = [deriv_row(ts, 0), deriv_row(ts, 1), deriv_row(ts, 2),
            deriv_row(tss, 1), deriv_row(tss, 2)]
    rhs = [-c1 / ts + c2, c1 / ts**2, -2.0 * c1 / ts**3, 0.0, 0.0]
    return np.linalg.solve(np.array(rows), np.array(rhs))


def single_cell_step(theta_prev, chi_prev, p_prev, tau, gamma, spacing,
                     curve, lam):
    """One step on a one-cell grid as scalar recursions: prox clamp,
    scalar Robin solve, internal-energy inversion by brentq."""
    robin = gamma * sum(2.0 / h for h in spacing)
    F = chi_prev / tau + curve.value(theta_prev) - math.log(p_prev)
    chi = min(max(tau * F, 0.0), lam)
    xi = F - chi / tau
    p = (p_prev / (tau * (1.0 + chi_prev))) / (1.0 / (tau * (1.0 + chi)) + robin)
    G = ((theta_prev * (1.0 + curve.deriv(theta_prev) * chi_prev)
          - curve.value(theta_prev) * chi) / tau
         + ((chi - chi_prev) / tau) ** 2)
    target = tau * G  # psi(theta, chi) = tau * G on a single cell

    def f(t):
        return t - chi * (curve.value(t) - t * curve.deriv(t)) - target

    theta = brentq(f, target - 10.0, target + 10.0, xtol=1e-14, rtol=8.9e-16)
    return {
        "chi": chi, "xi": xi, "p": p, "theta": theta,
        "u": p / (1.0 + chi),
        "e": theta - chi * (curve.value(theta) - theta * curve.deriv(theta)),
    }
