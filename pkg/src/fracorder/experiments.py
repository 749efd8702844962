"""Experiment harness: the reference two- and three-component systems,
observation cases A through F, noisy reconstruction batches, initial
guess sweeps, and CSV/JSON report emission.

Everything downstream of a (spec, seed base) pair is deterministic:
noise seeds derive from the base, the case label, the noise level and
the trial index, independent of execution order.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .forward import ObservationSeries, apply_noise, observe, solve_forward
from .grids import SpatialGrid, TimeGrid
from .inversion import (GaussNewtonSettings, InverseProblem,
                        ReconstructionResult, reconstruct)
from .system import SystemConfig

# Observed component labels per case (1-based).
CASE_COMPONENTS = {
    "A": (1,), "B": (2,), "C": (1, 2),
    "D": (3,), "E": (2, 3), "F": (1, 2, 3),
}

TRUTH_K2 = (0.9, 0.5)
TRUTH_K3 = (0.9, 0.6, 0.5)

DEFAULT_SEED_BASE = 42
DEFAULT_GRID = (100, 100)
FINE_GRID = (400, 400)

# Harness-wide iteration budget: all shipped experiments are expected to
# settle within 10 steps, so anything longer counts as divergence.
HARNESS_SETTINGS = GaussNewtonSettings(max_iters=10)


REFERENCE_COUPLING = {
    2: ((-1.0, 1.0), (1.0, -1.0)),
    3: ((-2.0, 1.0, 1.0), (1.0, -2.0, 1.0), (1.0, 1.0, -2.0)),
}
_TRUTH = {2: TRUTH_K2, 3: TRUTH_K3}


def bump_initial_values(k: int, space: SpatialGrid) -> np.ndarray:
    """Reference initial data: component 1 is twice the downward
    parabola peaking mid-domain, every other component the parabola
    itself; all vanish at the boundary."""
    x = space.nodes / space.L
    bump = -4.0 * (x - 0.5) ** 2 + 1.0
    scale = np.ones(k)
    if k > 1:
        scale[0] = 2.0
    u0 = scale[:, None] * bump[None, :]
    # the parabola vanishes at both ends exactly; snap residual dust anyway
    u0[:, [0, -1]] = 0.0
    return u0


def _build_config(k: int, n: int, m: int, alpha) -> SystemConfig:
    space = SpatialGrid(L=1.0, M=m)
    time = TimeGrid(T=1.0, N=n)
    return SystemConfig(
        alpha=np.asarray(alpha, dtype=float),
        coupling=np.asarray(REFERENCE_COUPLING[k], dtype=float),
        diffusion=np.ones(k),
        u0=bump_initial_values(k, space),
        space=space,
        time=time,
    )


def reference_config_k2(n: int = 100, m: int = 100):
    """The two-component reference system (zero-row-sum coupling, bump
    initial data, unit domain and horizon) and its true orders."""
    truth = np.asarray(TRUTH_K2)
    return _build_config(2, n, m, truth), truth


def reference_config_k3(n: int = 100, m: int = 100):
    """The three-component reference system and its true orders."""
    truth = np.asarray(TRUTH_K3)
    return _build_config(3, n, m, truth), truth


@dataclass(frozen=True)
class CaseSpec:
    """One observation scenario of a reference system.

    label selects the observed components (CASE_COMPONENTS); cases A-C
    run on the two-component system, D-F on the three-component one.
    inversion_grid is the (N, M) used for reconstruction; data_grid,
    when different, generates the observations on a finer grid whose N
    must be a multiple of the inversion N.
    """

    label: str
    deltas: tuple = (0.0,)
    alpha0s: tuple = ()
    seed_base: int = DEFAULT_SEED_BASE
    trials: int = 1
    x0: float = 0.5
    inversion_grid: tuple = DEFAULT_GRID
    data_grid: tuple | None = None

    def __post_init__(self) -> None:
        if self.label not in CASE_COMPONENTS:
            raise ValueError(f"unknown case label {self.label!r}")
        for d in self.deltas:
            if not 0.0 <= d < 1.0:
                raise ValueError(f"noise level {d} outside [0, 1)")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if not self.alpha0s:
            object.__setattr__(self, "alpha0s", ((0.5,) * self.K,))
        for a0 in self.alpha0s:
            if len(a0) != self.K:
                raise ValueError(f"initial guess {a0} has wrong length for K={self.K}")

    @property
    def K(self) -> int:
        return 2 if self.label in "ABC" else 3

    @property
    def observed(self) -> tuple:
        return CASE_COMPONENTS[self.label]

    @property
    def truth(self) -> np.ndarray:
        return np.asarray(_TRUTH[self.K])


@dataclass(frozen=True)
class SweepSpec:
    """Grid of initial guesses for one case: all (i/10, ...) tuples with
    components descending from 9/10 to 1/10, 45 points for K = 2 and 165
    for K = 3. Sweep data is noiseless unless delta says otherwise."""

    case: CaseSpec
    delta: float = 0.0

    def starts(self) -> list:
        k = self.case.K
        points = []
        if k == 2:
            for i in range(1, 10):
                for j in range(1, i + 1):
                    points.append((i / 10.0, j / 10.0))
        else:
            for i in range(1, 10):
                for j in range(1, i + 1):
                    for l in range(1, j + 1):
                        points.append((i / 10.0, j / 10.0, l / 10.0))
        return points


@dataclass(frozen=True)
class RunRow:
    """One reconstruction outcome."""

    case: str
    delta: float
    alpha0: tuple
    alpha_star: tuple
    rel_err_pct: tuple
    status: str
    iterations: int
    seed: int | None


@dataclass(frozen=True)
class ExperimentReport:
    """Rows plus aggregate counts; converged + diverged = len(rows)."""

    rows: tuple
    converged: int
    diverged: int
    iter_min: int | None
    iter_max: int | None

    @classmethod
    def from_rows(cls, rows) -> "ExperimentReport":
        rows = tuple(rows)
        conv = [r for r in rows if r.status == "converged"]
        its = [r.iterations for r in conv]
        return cls(
            rows=rows,
            converged=len(conv),
            diverged=len(rows) - len(conv),
            iter_min=min(its) if its else None,
            iter_max=max(its) if its else None,
        )


def derive_seed(base: int, label: str, delta: float, trial: int) -> int:
    """Independent per-run noise seed, stable across platforms."""
    ss = np.random.SeedSequence(
        [int(base), ord(label), int(round(delta * 1e6)), int(trial)]
    )
    return int(ss.generate_state(1)[0])


def _clean_series(spec: CaseSpec):
    """Noiseless observations on the inversion time grid, plus the
    observation node index on the inversion spatial grid."""
    n, m = spec.inversion_grid
    if spec.data_grid is None or tuple(spec.data_grid) == tuple(spec.inversion_grid):
        config = _build_config(spec.K, n, m, spec.truth)
        series = observe(solve_forward(config), spec.observed, spec.x0)
        return series.values, series.m0
    nf, mf = spec.data_grid
    if nf % n != 0:
        raise ValueError(f"data-grid N={nf} must be a multiple of inversion N={n}")
    config = _build_config(spec.K, nf, mf, spec.truth)
    series = observe(solve_forward(config), spec.observed, spec.x0)
    stride = nf // n
    values = np.ascontiguousarray(series.values[:, stride - 1::stride])
    m0 = SpatialGrid(L=1.0, M=m).nearest_node(spec.x0)
    return values, m0


def _problem_for(spec: CaseSpec, values: np.ndarray, m0: int,
                 delta: float, seed: int | None) -> InverseProblem:
    n, m = spec.inversion_grid
    config = _build_config(spec.K, n, m, spec.truth)
    series = ObservationSeries(
        components=spec.observed,
        m0=m0,
        values=apply_noise(values, delta, seed),
        delta=float(delta),
        seed=seed,
    )
    return InverseProblem.from_config(config, series)


def _row(spec: CaseSpec, delta: float, alpha0, seed: int | None,
         result: ReconstructionResult) -> RunRow:
    return RunRow(
        case=spec.label,
        delta=float(delta),
        alpha0=tuple(float(a) for a in alpha0),
        alpha_star=tuple(float(a) for a in result.alpha_star),
        rel_err_pct=tuple(float(e) for e in result.rel_err_pct),
        status=result.label,
        iterations=result.iterations,
        seed=seed,
    )


def run_case(spec: CaseSpec,
             settings: GaussNewtonSettings = HARNESS_SETTINGS,
             threads: int = 1) -> ExperimentReport:
    """Reconstruct for every (noise level, trial, initial guess) of the
    case. Per-run failures are recorded in the row status, never raised."""
    clean, m0 = _clean_series(spec)

    jobs = []
    for delta in spec.deltas:
        for trial in range(spec.trials):
            seed = derive_seed(spec.seed_base, spec.label, delta, trial) \
                if delta > 0 else None
            problem = _problem_for(spec, clean, m0, delta, seed)
            for alpha0 in spec.alpha0s:
                jobs.append((delta, alpha0, seed, problem))

    def _run(job):
        delta, alpha0, seed, problem = job
        result = reconstruct(alpha0, problem, settings, truth=spec.truth)
        return _row(spec, delta, alpha0, seed, result)

    rows = _map_jobs(_run, jobs, threads)
    return ExperimentReport.from_rows(rows)


def run_sweep(spec: SweepSpec,
              settings: GaussNewtonSettings = HARNESS_SETTINGS,
              threads: int = 1) -> ExperimentReport:
    """Reconstruct from every initial guess on the sweep grid against
    one shared data realization."""
    case = spec.case
    clean, m0 = _clean_series(case)
    seed = derive_seed(case.seed_base, case.label, spec.delta, 0) \
        if spec.delta > 0 else None
    problem = _problem_for(case, clean, m0, spec.delta, seed)

    def _run(alpha0):
        result = reconstruct(alpha0, problem, settings, truth=case.truth)
        return _row(case, spec.delta, alpha0, seed, result)

    rows = _map_jobs(_run, spec.starts(), threads)
    return ExperimentReport.from_rows(rows)


def _map_jobs(fn, jobs, threads: int):
    if threads <= 1:
        return [fn(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs))


def report_csv_text(report: ExperimentReport) -> str:
    """Render the report as CSV text, 6-decimal fixed precision."""
    if not report.rows:
        raise ValueError("refusing to render an empty report")
    k = len(report.rows[0].alpha0)
    for r in report.rows:
        if len(r.alpha0) != k:
            raise ValueError("mixed component counts in one report")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = (
        ["case", "delta"]
        + [f"alpha0_{i + 1}" for i in range(k)]
        + [f"alpha_star_{i + 1}" for i in range(k)]
        + [f"rel_err_pct_{i + 1}" for i in range(k)]
        + ["status", "iterations", "seed"]
    )
    writer.writerow(header)
    for r in report.rows:
        writer.writerow(
            [r.case, f"{r.delta:.6f}"]
            + [f"{a:.6f}" for a in r.alpha0]
            + [f"{a:.6f}" for a in r.alpha_star]
            + [f"{e:.6f}" for e in r.rel_err_pct]
            + [r.status, r.iterations, "" if r.seed is None else r.seed]
        )
    return buf.getvalue()


def report_summary(report: ExperimentReport) -> dict:
    if not report.rows:
        raise ValueError("refusing to summarize an empty report")
    by_status: dict = {}
    for r in report.rows:
        by_status[r.status] = by_status.get(r.status, 0) + 1
    return {
        "rows": len(report.rows),
        "converged": report.converged,
        "diverged": report.diverged,
        "iter_min": report.iter_min,
        "iter_max": report.iter_max,
        "by_status": dict(sorted(by_status.items())),
    }


def emit_report(report: ExperimentReport, out_dir: str,
                basename: str = "report") -> tuple:
    """Write <basename>.csv and <basename>_summary.json under out_dir;
    byte-identical for identical reports. Refuses empty reports."""
    csv_text = report_csv_text(report)
    summary = report_summary(report)
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{basename}.csv")
    json_path = os.path.join(out_dir, f"{basename}_summary.json")
    with open(csv_path, "w", newline="") as fh:
        fh.write(csv_text)
    with open(json_path, "w", newline="") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path
