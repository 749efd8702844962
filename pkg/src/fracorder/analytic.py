"""Independent analytic machinery used to validate the forward solver:
a Mittag-Leffler evaluator and the closed-form single-component solution.

Nothing here calls the reconstruction code, and no analytic value is
produced by the time-marching scheme, so these serve as external oracles.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.special import rgamma

from .forward import solve_forward
from .grids import SpatialGrid, TimeGrid
from .system import SystemConfig

# mpmath precision is process-global state; serialize access to it.
_MP_LOCK = threading.Lock()

_Z_CAP = 50.0
_MAX_TERMS = 100_000
# |z|^(1/alpha) measures the cancellation of the alternating series
# (the count of decimal digits lost scales linearly with it). Plain
# doubles are fine below _FLOAT_SCALE; extended precision handles the
# middle range; beyond _ASYMP_SCALE the tail expansion in 1/z is both
# cheaper and more accurate than any series.
_FLOAT_SCALE = 5.0
_ASYMP_SCALE = 64.0


@dataclass(frozen=True)
class MLQuery:
    """Evaluation request for E_alpha(z) with truncation tolerance tol."""

    alpha: float
    z: float
    tol: float = 1e-10

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"order must lie in (0, 1], got {self.alpha}")
        if not self.tol > 0.0:
            raise ValueError(f"tolerance must be positive, got {self.tol}")


def _series_float(alpha: float, z: float, tol: float) -> float:
    s = 1.0
    term = 1.0
    small = 0
    for k in range(1, _MAX_TERMS):
        term = term * z
        value = term * rgamma(alpha * k + 1.0)
        s += value
        if not math.isfinite(s):
            raise ValueError(f"series overflows double range at z = {z}")
        if s != 0.0 and abs(value) < tol * abs(s):
            small += 1
            if small == 3:
                return s
        else:
            small = 0
    raise RuntimeError("series did not settle within the term budget")


def _series_mp(alpha: float, z: float, tol: float) -> float:
    digits_lost = abs(z) ** (1.0 / alpha)
    with _MP_LOCK:
        saved = mpmath.mp.dps
        try:
            mpmath.mp.dps = 17 + int(0.4343 * digits_lost) + 25
            za = mpmath.mpf(z)
            aa = mpmath.mpf(alpha)
            s = mpmath.mpf(1)
            power = mpmath.mpf(1)
            small = 0
            for k in range(1, _MAX_TERMS):
                power = power * za
                value = power / mpmath.gamma(aa * k + 1)
                s += value
                if s != 0 and abs(value) < tol * abs(s):
                    small += 1
                    if small == 3:
                        return float(s)
                else:
                    small = 0
            raise RuntimeError("series did not settle within the term budget")
        finally:
            mpmath.mp.dps = saved


def _asymptotic(alpha: float, z: float, tol: float) -> float:
    # E_alpha(z) ~ -sum_{k>=1} z^(-k) / Gamma(1 - alpha k) for z -> -inf.
    # The expansion diverges eventually: stop at the smallest term.
    s = 0.0
    last = math.inf
    small = 0
    for k in range(1, 200):
        value = -rgamma(1.0 - alpha * k) / z**k
        if abs(value) > last:
            break
        last = abs(value) if value != 0.0 else last
        s += value
        if s != 0.0 and abs(value) < tol * abs(s):
            small += 1
            if small == 3:
                break
        else:
            small = 0
    return s


def mittag_leffler(q: MLQuery) -> float:
    """E_alpha(z) = sum_k z^k / Gamma(alpha k + 1) for real z, |z| <= 50.

    The series is truncated once the running term magnitude stays below
    tol times the partial-sum magnitude for 3 consecutive terms. Strongly
    alternating regimes (large |z|^(1/alpha), in particular all z < -5)
    are evaluated with extended working precision or, deeper in, with
    the tail expansion in 1/z.
    """
    if abs(q.z) > _Z_CAP:
        raise ValueError(f"argument magnitude {abs(q.z)} exceeds supported {_Z_CAP}")
    if q.z == 0.0:
        return 1.0
    if q.z > 0.0:
        return _series_float(q.alpha, q.z, q.tol)
    scale = abs(q.z) ** (1.0 / q.alpha)
    if scale <= _FLOAT_SCALE:
        return _series_float(q.alpha, q.z, q.tol)
    if scale <= _ASYMP_SCALE:
        return _series_mp(q.alpha, q.z, q.tol)
    return _asymptotic(q.alpha, q.z, q.tol)


def analytic_single_component(alpha: float, c: float, L: float, x0: float,
                              t: float) -> float:
    """Exact solution value at (x0, t) of the single-component problem

        D_t^alpha(u - u0) = u'' + c u,  u0(x) = sin(pi x / L),

    with homogeneous Dirichlet data; equals
    E_alpha(-(pi^2/L^2 - c) t^alpha) sin(pi x0 / L).
    """
    lam = (math.pi / L) ** 2 - c
    if not lam > 0.0:
        raise ValueError(f"decay rate pi^2/L^2 - c must be positive, got {lam}")
    if t < 0.0:
        raise ValueError(f"time must be nonnegative, got {t}")
    e = mittag_leffler(MLQuery(alpha=alpha, z=-lam * t**alpha))
    return e * math.sin(math.pi * x0 / L)


@dataclass(frozen=True)
class ConvergenceRow:
    """One grid of a refinement study: absolute and relative error at
    the observation point at final time, and the error ratio against
    the previous grid (nan for the first row)."""

    n: int
    m: int
    error: float
    rel_error: float
    ratio: float


def convergence_study(alpha: float, grids, c: float = 0.0, L: float = 1.0,
                      T: float = 1.0, x0: float = 0.5) -> list:
    """Run the solver on the analytic single-component case for each
    (N, M) in grids (ordered by refinement) and report the error at
    (x0, T) against the closed form."""
    grids = list(grids)
    for (n0, m0), (n1, m1) in zip(grids, grids[1:]):
        if n1 < n0 or m1 < m0:
            raise ValueError("grids must be ordered by refinement")

    rows = []
    prev_err = math.nan
    for n, m in grids:
        space = SpatialGrid(L=L, M=m)
        time = TimeGrid(T=T, N=n)
        u0 = np.sin(np.pi * space.nodes / L)[None, :].copy()
        u0[:, 0] = 0.0
        u0[:, -1] = 0.0
        config = SystemConfig(
            alpha=np.array([alpha]),
            coupling=np.array([[c]]),
            diffusion=np.array([1.0]),
            u0=u0,
            space=space,
            time=time,
        )
        field = solve_forward(config)
        node = space.nearest_node(x0)
        exact = analytic_single_component(alpha, c, L, node * space.h, T)
        err = abs(field.values[0, -1, node] - exact)
        ratio = prev_err / err if err > 0.0 and math.isfinite(prev_err) else math.nan
        rows.append(ConvergenceRow(
            n=n, m=m, error=err,
            rel_error=err / abs(exact) if exact != 0.0 else math.inf,
            ratio=ratio,
        ))
        prev_err = err
    return rows
