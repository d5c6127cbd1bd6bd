"""JIT-compiled inner loops.

One projected Gauss-Seidel sweep over a 3D array view in lexicographic
cell order (x fastest).  Grids of lower dimension pass singleton trailing
axes; an axis with a single cell simply has no neighbors.
"""

import numba


@numba.njit(cache=True)
def pgs_sweep_interval(chi, rhs, kappa, inv_tau, ih2x, ih2y, ih2z, lo, hi):
    nx, ny, nz = chi.shape
    for iz in range(nz):
        for iy in range(ny):
            for ix in range(nx):
                acc = 0.0
                diag = inv_tau
                if ix > 0:
                    acc += ih2x * chi[ix - 1, iy, iz]
                    diag += kappa * ih2x
                if ix < nx - 1:
                    acc += ih2x * chi[ix + 1, iy, iz]
                    diag += kappa * ih2x
                if iy > 0:
                    acc += ih2y * chi[ix, iy - 1, iz]
                    diag += kappa * ih2y
                if iy < ny - 1:
                    acc += ih2y * chi[ix, iy + 1, iz]
                    diag += kappa * ih2y
                if iz > 0:
                    acc += ih2z * chi[ix, iy, iz - 1]
                    diag += kappa * ih2z
                if iz < nz - 1:
                    acc += ih2z * chi[ix, iy, iz + 1]
                    diag += kappa * ih2z
                val = (rhs[ix, iy, iz] + kappa * acc) / diag
                if val < lo:
                    val = lo
                elif val > hi:
                    val = hi
                chi[ix, iy, iz] = val
