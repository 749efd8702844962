"""Implicit forward solver for coupled subdiffusion systems and the
pointwise observation operator.

Space is discretized by central differences, time by the L1 scheme. All
components are advanced together: each time step solves one banded block
system over the interior nodes, ordered node-major with the component
index fastest, so the bandwidth is the component count K. The matrix is
factored once and reused across all N steps.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import lapack

from .grids import SpatialGrid, TimeGrid
from .l1 import L1Weights, l1_weights
from .marching import StepSolveError, march
from .system import SystemConfig


@dataclass(frozen=True)
class SolutionField:
    """Solution values of shape (K, N+1, M+1): component, time node,
    space node. Boundary columns are exactly zero at every time node and
    time slice 0 equals the configured initial values."""

    values: np.ndarray
    space: SpatialGrid
    time: TimeGrid


@dataclass(frozen=True)
class ObservationSeries:
    """Values u_k(x0, t_i) for i = 1..N per observed component (time
    node 0 carries no information and is excluded).

    components: observed component labels, 1-based, ascending.
    m0: index of the grid node nearest to the requested x0.
    values: (len(components), N) array, noisy when delta > 0.
    seed: RNG seed used for the noise draw, None for clean data.
    """

    components: tuple
    m0: int
    values: np.ndarray
    delta: float
    seed: int | None


def _assemble(config: SystemConfig, scales: np.ndarray):
    """Banded implicit step matrix in LAPACK storage, LU-factored.

    Row block k of the system is
        d_k u_k - a_k (second difference)/h^2 - sum_l C[k,l] u_l
    over interior nodes. Returns (lu, ipiv, bw).
    """
    k = config.K
    mi = config.space.interior_count
    n = k * mi
    h = config.space.h
    c = config.coupling
    a = config.diffusion
    bw = min(k, n - 1)
    ab = np.zeros((3 * bw + 1, n), order="F")
    r0 = 2 * bw

    for ki in range(k):
        cols = np.arange(mi) * k + ki
        ab[r0, cols] = scales[ki] + a[ki] * 2.0 / h**2 - c[ki, ki]
        if mi > 1:
            ab[r0 + k, cols[:-1]] = -a[ki] / h**2
            ab[r0 - k, cols[1:]] = -a[ki] / h**2
        for li in range(k):
            if li != ki:
                ab[r0 + (ki - li), np.arange(mi) * k + li] = -c[ki, li]

    lu, ipiv, info = lapack.dgbtrf(ab, bw, bw)
    if info != 0:
        raise StepSolveError(f"banded factorization failed (info={info})")
    return np.asfortranarray(lu), np.ascontiguousarray(ipiv, dtype=np.intc), bw


def step_system(config: SystemConfig, weights: Sequence[L1Weights],
                history: np.ndarray, prev: np.ndarray,
                step_index: int | None = None) -> np.ndarray:
    """One implicit time step.

    history: (K, M-1) accumulated memory term
        H_k = d_k * sum_{j=1}^{n-1} b_j (u_k^{n-j} - u_k^{n-j-1})
    prev: (K, M-1) interior values of the previous slice.

    Returns the (K, M-1) interior values of the new slice, the solution
    of the fully implicit block system.
    """
    scales = np.array([w.scale for w in weights])
    try:
        lu, ipiv, bw = _assemble(config, scales)
    except StepSolveError as exc:
        if step_index is not None:
            raise StepSolveError(f"{exc.args[0]} at time step {step_index}") from None
        raise
    rhs = scales[:, None] * prev - history
    x, info = lapack.dgbtrs(lu, bw, bw, rhs.T.reshape(-1), ipiv)
    if info != 0:
        where = f" at time step {step_index}" if step_index is not None else ""
        raise StepSolveError(f"banded back-substitution failed{where} (info={info})")
    return x.reshape(config.space.interior_count, config.K).T


def solve_forward(config: SystemConfig) -> SolutionField:
    """Solve the coupled system over the full space-time grid."""
    k = config.K
    nt = config.time.N
    mi = config.space.interior_count

    weights = [l1_weights(float(a), config.time) for a in config.alpha]
    scales = np.array([w.scale for w in weights])
    w = np.stack([wt.b for wt in weights])
    lu, ipiv, bw = _assemble(config, scales)

    u = np.zeros((nt + 1, k, mi))
    u[0] = config.u0[:, 1:-1]
    march(lu, ipiv, bw, scales, w, u)

    values = np.zeros((k, nt + 1, config.space.M + 1))
    values[:, :, 1:-1] = u.transpose(1, 0, 2)
    values[:, 0, :] = config.u0
    return SolutionField(values=values, space=config.space, time=config.time)


def apply_noise(values: np.ndarray, delta: float,
                seed: int | None) -> np.ndarray:
    """Multiplicative observation noise g * (1 + delta * xi) with xi
    i.i.d. uniform on [-1, 1]; delta = 0 returns an exact copy."""
    if delta == 0.0:
        return values.copy()
    rng = np.random.default_rng(seed)
    xi = rng.uniform(-1.0, 1.0, size=values.shape)
    return values * (1.0 + delta * xi)


def observe(field: SolutionField, components: Sequence[int], x0: float,
            delta: float = 0.0, seed: int | None = None) -> ObservationSeries:
    """Extract u_k(x0, t_i), i = 1..N, for the given components.

    x0 must lie within half a spacing of a grid node (no interpolation).
    When delta > 0, multiplicative noise g * (1 + delta * xi) is applied
    with xi drawn i.i.d. uniform on [-1, 1] from a generator seeded with
    seed, so |g_noisy - g| <= delta * |g| holds for every sample. When
    delta = 0 the clean values are returned bit-for-bit and no generator
    is consumed.
    """
    comps = tuple(sorted(int(c) for c in components))
    if not comps:
        raise ValueError("observed component set must be nonempty")
    kmax = field.values.shape[0]
    for c in comps:
        if not 1 <= c <= kmax:
            raise ValueError(f"component label {c} outside 1..{kmax}")
    if delta < 0:
        raise ValueError(f"noise level must be nonnegative, got {delta}")

    m0 = field.space.nearest_node(x0)
    clean = np.stack([field.values[c - 1, 1:, m0] for c in comps])

    if delta == 0.0:
        return ObservationSeries(components=comps, m0=m0, values=clean,
                                 delta=0.0, seed=None)

    return ObservationSeries(components=comps, m0=m0,
                             values=apply_noise(clean, delta, seed),
                             delta=float(delta), seed=seed)


def export_field_csv(field: SolutionField, out_dir: str,
                     prefix: str = "component") -> list:
    """Write one CSV per component: one row per time node, one column
    per space node. Returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for k in range(field.values.shape[0]):
        path = os.path.join(out_dir, f"{prefix}_{k + 1}.csv")
        np.savetxt(path, field.values[k], fmt="%.17g", delimiter=",")
        paths.append(path)
    return paths
