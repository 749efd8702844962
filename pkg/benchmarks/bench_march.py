"""Benchmark the compiled time-marching kernel against the NumPy one.

Runs the full implicit march (factorization excluded, it is shared) on
the reference systems over a range of grids and prints best-of-5 wall
times plus the speedup. Usage:

    python3 benchmarks/bench_march.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from fracorder import _march, _march_py
from fracorder.experiments import reference_config_k2, reference_config_k3
from fracorder.forward import _assemble
from fracorder.l1 import l1_weights


def _inputs(config):
    weights = [l1_weights(float(a), config.time) for a in config.alpha]
    scales = np.array([w.scale for w in weights])
    w = np.stack([wt.b for wt in weights])
    lu, ipiv, bw = _assemble(config, scales)
    return lu, ipiv, bw, scales, w


def _fresh_state(config):
    u = np.zeros((config.time.N + 1, config.K,
                  config.space.interior_count))
    u[0] = config.u0[:, 1:-1]
    return u


def _best_of(kernel, config, prepared, repeats):
    best = np.inf
    out = None
    for _ in range(repeats):
        u = _fresh_state(config)
        t0 = time.perf_counter()
        kernel.march(*prepared, u)
        best = min(best, time.perf_counter() - t0)
        out = u
    return best, out


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    grids = ((100, 100), (200, 200), (400, 400))
    builders = (("K=2", reference_config_k2), ("K=3", reference_config_k3))

    header = (f"{'system':>6} {'grid (N,M)':>12} {'compiled':>12} "
              f"{'python':>12} {'speedup':>8} {'max rel gap':>12}")
    print(header)
    print("-" * len(header))
    for name, builder in builders:
        for n, m in grids:
            config, _ = builder(n=n, m=m)
            prepared = _inputs(config)
            t_c, u_c = _best_of(_march, config, prepared, args.repeats)
            t_p, u_p = _best_of(_march_py, config, prepared, args.repeats)
            gap = float(np.max(np.abs(u_c - u_p)) / np.max(np.abs(u_c)))
            print(f"{name:>6} {f'({n},{m})':>12} {t_c * 1e3:>10.2f}ms "
                  f"{t_p * 1e3:>10.2f}ms {t_p / t_c:>7.2f}x {gap:>12.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
