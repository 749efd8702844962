"""Pure NumPy time-marching kernel.

Reference implementation of the implicit L1 stepping loop; the compiled
kernel in _march.pyx performs the same arithmetic. Either one is picked
at import time by the marching module.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lapack

from .marching_errors import NumericalBlowUpError, StepSolveError


def march(lu: np.ndarray, ipiv: np.ndarray, bw: int, scale: np.ndarray,
          w: np.ndarray, u: np.ndarray) -> None:
    """Advance u in place through all time steps.

    lu, ipiv: banded LU factorization of the implicit step matrix with
        bandwidth bw (node-major unknown ordering, component index fastest).
    scale: (K,) L1 scales d_k.
    w: (K, N) L1 weight rows b_0..b_{N-1} per component.
    u: (N+1, K, M-1) interior values; u[0] holds the initial slice and
        u[1:] is filled by this call.
    """
    nt = u.shape[0] - 1
    mi = u.shape[2]
    # increments u^n - u^{n-1}, accumulated for the memory term
    d = np.empty((nt,) + u.shape[1:])
    for n in range(1, nt + 1):
        rhs = scale[:, None] * u[n - 1]
        if n > 1:
            # memory term: sum_{j=1}^{n-1} b_j (u^{n-j} - u^{n-j-1})
            rhs = rhs - scale[:, None] * np.einsum(
                "kj,jkm->km", w[:, 1:n], d[n - 2::-1]
            )
        x, info = lapack.dgbtrs(lu, bw, bw, rhs.T.reshape(-1), ipiv)
        if info != 0:
            raise StepSolveError(
                f"banded back-substitution failed at time step {n} (info={info})"
            )
        un = x.reshape(mi, -1).T
        if not np.all(np.isfinite(un)):
            raise NumericalBlowUpError(f"non-finite values at time step {n}")
        u[n] = un
        d[n - 1] = u[n] - u[n - 1]
