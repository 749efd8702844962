# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled time-marching kernel: implicit L1 stepping with a banded
back-substitution per step. Mirrors _march_py.march.

The banded LU factor comes from the driver; applying it is written out
here as explicit forward/back substitution loops (kl = ku = bw, unit
lower factor, row swaps from ipiv) so the kernel depends on nothing but
the buffers it is handed.
"""

import numpy as np

from libc.math cimport isfinite

from .marching_errors import NumericalBlowUpError


def march(double[::1, :] lu, int[::1] ipiv, int bw_, double[::1] scale,
          double[:, ::1] w, double[:, :, ::1] u):
    """Advance u in place through all time steps (see _march_py.march)."""
    cdef int nt = u.shape[0] - 1
    cdef int kk = u.shape[1]
    cdef int mi = u.shape[2]
    cdef int nsys = kk * mi
    cdef int bw = bw_
    cdef int d0 = 2 * bw  # row of the U diagonal in banded storage
    cdef int bad = 0
    cdef int n, j, k, m, i, lm, piv, p
    cdef double coef, val, bj
    cdef double[::1] rhs = np.empty(nsys, dtype=np.float64)
    cdef double[:, :, ::1] d = np.empty((nt, kk, mi), dtype=np.float64)
    # memory-term accumulator, kept (k, m)-contiguous so the hot inner
    # loop streams unit-stride instead of striding through rhs
    cdef double[:, ::1] acc = np.empty((kk, mi), dtype=np.float64)

    with nogil:
        for n in range(1, nt + 1):
            # memory term: sum_{j=1}^{n-1} b_j (u^{n-j} - u^{n-j-1})
            for k in range(kk):
                for m in range(mi):
                    acc[k, m] = 0.0
            for j in range(1, n):
                p = n - 1 - j
                for k in range(kk):
                    coef = w[k, j]
                    for m in range(mi):
                        acc[k, m] += coef * d[p, k, m]
            # node-major right-hand side d_k (u^{n-1} - memory)
            for k in range(kk):
                coef = scale[k]
                for m in range(mi):
                    rhs[m * kk + k] = coef * (u[n - 1, k, m] - acc[k, m])

            # L solve: swaps plus rank-one updates, multipliers in rows
            # d0+1..d0+bw of column j; ipiv is 0-based as returned by the
            # factorization wrapper
            for j in range(nsys - 1):
                lm = bw if bw < nsys - 1 - j else nsys - 1 - j
                piv = ipiv[j]
                if piv != j:
                    val = rhs[piv]
                    rhs[piv] = rhs[j]
                    rhs[j] = val
                bj = rhs[j]
                if bj != 0.0:
                    for i in range(1, lm + 1):
                        rhs[j + i] -= lu[d0 + i, j] * bj
            # U solve: upper band of width 2*bw, diagonal in row d0
            for j in range(nsys - 1, -1, -1):
                rhs[j] /= lu[d0, j]
                bj = rhs[j]
                i = j - d0 if j > d0 else 0
                while i < j:
                    rhs[i] -= lu[d0 + i - j, j] * bj
                    i += 1

            for k in range(kk):
                for m in range(mi):
                    val = rhs[m * kk + k]
                    if not isfinite(val):
                        bad = n
                        break
                    u[n, k, m] = val
                    d[n - 1, k, m] = val - u[n - 1, k, m]
                if bad:
                    break
            if bad:
                break

    if bad:
        raise NumericalBlowUpError(f"non-finite values at time step {bad}")
