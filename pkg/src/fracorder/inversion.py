"""Simultaneous recovery of all fractional orders from pointwise
observations by damped-free Gauss-Newton iteration on the discrete
least-squares misfit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forward import ObservationSeries, solve_forward
from .grids import SpatialGrid, TimeGrid
from .marching import NumericalBlowUpError, StepSolveError
from .system import SystemConfig

# Safeguards applied by reconstruct (documented there): reject steps
# longer than the cap outright, and tolerate at most this many
# boundary-clip events per run before declaring divergence.
_STEP_NORM_CAP = 25.0
_CLIP_RESCUES = 1
# Rows are weighted by 1/|g|; the floor keeps near-zero samples from
# dominating the weighted system.
_WEIGHT_FLOOR = 1e-8


class SingularStepError(RuntimeError):
    """The Jacobian is numerically rank-deficient at the current iterate."""


@dataclass(frozen=True)
class InverseProblem:
    """Everything the forward map needs except the orders, plus the data.

    observed holds 1-based component labels, ascending, and must match
    the data's component labels; each data row has exactly N samples.
    """

    coupling: np.ndarray
    diffusion: np.ndarray
    u0: np.ndarray
    space: SpatialGrid
    time: TimeGrid
    data: ObservationSeries
    observed: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "observed", tuple(int(c) for c in self.observed))
        if self.observed != tuple(self.data.components):
            raise ValueError(
                f"observed set {self.observed} does not match "
                f"data components {tuple(self.data.components)}"
            )
        if self.data.values.shape[1] != self.time.N:
            raise ValueError(
                f"data has {self.data.values.shape[1]} samples per component, "
                f"expected N = {self.time.N}"
            )

    @classmethod
    def from_config(cls, config: SystemConfig,
                    data: ObservationSeries) -> "InverseProblem":
        """Build the problem from a system description, discarding its
        orders (they are the unknown)."""
        return cls(
            coupling=config.coupling,
            diffusion=config.diffusion,
            u0=config.u0,
            space=config.space,
            time=config.time,
            data=data,
            observed=tuple(data.components),
        )

    @property
    def K(self) -> int:
        return self.coupling.shape[0]

    def config_at(self, alpha) -> SystemConfig:
        return SystemConfig(
            alpha=np.asarray(alpha, dtype=float),
            coupling=self.coupling,
            diffusion=self.diffusion,
            u0=self.u0,
            space=self.space,
            time=self.time,
        )

    def data_vector(self) -> np.ndarray:
        """Observed samples stacked by ascending component label."""
        return np.asarray(self.data.values, dtype=float).reshape(-1)


@dataclass(frozen=True)
class GaussNewtonSettings:
    """eps_stop: stop when the Euclidean step norm drops to this.
    fd_step: one-sided finite-difference perturbation for the Jacobian.
    max_iters: iteration budget before declaring divergence.
    eta: margin of the admissible box [eta, 1 - eta]^K inside (0, 1)^K.
    """

    eps_stop: float = 1e-6
    fd_step: float = 1e-6
    max_iters: int = 50
    eta: float = 1e-3

    def __post_init__(self) -> None:
        if not self.eps_stop > 0:
            raise ValueError(f"eps_stop must be positive, got {self.eps_stop}")
        if not 0 < abs(self.fd_step) < 1:
            raise ValueError(f"fd_step must satisfy 0 < |fd_step| < 1, got {self.fd_step}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        if not 0 < self.eta < 0.5:
            raise ValueError(f"eta must lie in (0, 0.5), got {self.eta}")


@dataclass(frozen=True)
class ReconstructionResult:
    """status is 'converged' or 'diverged'; reason refines divergence:
    'left-domain', 'non-finite', 'max-iterations' or 'singular-step'.

    alpha_star is the final iterate (the reconstruction when converged).
    iterate_history has iterations + 1 rows (starting guess included),
    residual_norm_history one unweighted misfit norm per row. rel_err_pct
    holds per-component errors |a_k - truth_k| / truth_k * 100 when a
    truth was supplied.
    """

    status: str
    reason: str | None
    alpha_star: np.ndarray
    iterations: int
    iterate_history: np.ndarray
    residual_norm_history: np.ndarray
    rel_err_pct: np.ndarray | None = None

    @property
    def label(self) -> str:
        return self.status if self.reason is None else f"{self.status}({self.reason})"

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def _check_alpha(alpha: np.ndarray) -> None:
    if not np.all((alpha > 0.0) & (alpha < 1.0)):
        raise ValueError(f"orders must lie strictly in (0, 1), got {alpha.tolist()}")


def _observed_vector(problem: InverseProblem, alpha: np.ndarray) -> np.ndarray:
    """Clean model observations at the data's node, stacked like the data."""
    try:
        field = solve_forward(problem.config_at(alpha))
    except (NumericalBlowUpError, StepSolveError) as exc:
        exc.args = (f"{exc.args[0]} [alpha={np.asarray(alpha).tolist()}]",)
        raise
    return np.concatenate(
        [field.values[c - 1, 1:, problem.data.m0] for c in problem.data.components]
    )


def residual(alpha, problem: InverseProblem) -> np.ndarray:
    """Stacked misfit u(alpha)(x0, t_i) - g_i over observed components,
    ordered by ascending component label; length N x #observed."""
    alpha = np.asarray(alpha, dtype=float)
    _check_alpha(alpha)
    return _observed_vector(problem, alpha) - problem.data_vector()


def _fd_directions(alpha: np.ndarray, fd_step: float, eta: float) -> np.ndarray:
    """Per-component one-sided perturbations, flipped away from the
    admissible-box faces so perturbed points stay inside (0, 1)."""
    eps = np.full(alpha.shape, fd_step, dtype=float)
    for k in range(alpha.shape[0]):
        if not eta < alpha[k] + eps[k] < 1.0 - eta:
            eps[k] = -eps[k]
        if not 0.0 < alpha[k] + eps[k] < 1.0:
            raise ValueError(
                f"perturbed order {alpha[k]} +/- {abs(fd_step)} leaves (0, 1)"
            )
    return eps


def _fd_columns(problem: InverseProblem, alpha: np.ndarray,
                u_base: np.ndarray, fd_step: float, eta: float) -> np.ndarray:
    """Jacobian columns by one-sided differences, K extra solves."""
    k = alpha.shape[0]
    eps = _fd_directions(alpha, fd_step, eta)
    cols = np.empty((u_base.shape[0], k))
    for i in range(k):
        pert = alpha.copy()
        pert[i] += eps[i]
        cols[:, i] = (_observed_vector(problem, pert) - u_base) / eps[i]
    return cols


def jacobian_fd(alpha, problem: InverseProblem, fd_step: float,
                eta: float = 1e-3) -> np.ndarray:
    """Finite-difference Jacobian of the residual: one column per order,
    (residual(alpha + eps e_k) - residual(alpha)) / eps with the sign of
    eps flipped per component when the positive probe would leave the
    admissible box. Costs exactly K forward solves beyond the base."""
    alpha = np.asarray(alpha, dtype=float)
    _check_alpha(alpha)
    u_base = _observed_vector(problem, alpha)
    return _fd_columns(problem, alpha, u_base, fd_step, eta)


def gauss_newton_step(J: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Least-squares step s minimizing |J s + r|, via orthogonal
    factorization (equivalent to -(J^T J)^{-1} J^T r at full rank)."""
    sv = np.linalg.svd(J, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] ** 2 < 1e-14 * sv[0] ** 2:
        raise SingularStepError(
            f"rank-deficient Jacobian (singular values {sv.tolist()})"
        )
    s, *_ = np.linalg.lstsq(J, -r, rcond=None)
    return s


def _safe_rnorm(problem: InverseProblem, alpha: np.ndarray,
                g: np.ndarray) -> float:
    try:
        return float(np.linalg.norm(_observed_vector(problem, alpha) - g))
    except (NumericalBlowUpError, StepSolveError):
        return float("nan")


def reconstruct(alpha0, problem: InverseProblem,
                settings: GaussNewtonSettings | None = None,
                truth=None) -> ReconstructionResult:
    """Gauss-Newton iteration from alpha0 until the step norm falls to
    eps_stop (converged) or a divergence rule fires.

    The step is computed on rows scaled by 1 / |g_i| (a relative misfit,
    matching the multiplicative noise model); the reported residual
    norms stay unweighted. Safeguards: a raw step longer than 25 is
    divergence (left-domain) outright; an iterate stepping outside the
    admissible box is clipped back at most once per run, and a second
    such event, or stalling on a clipped iteration, is divergence
    (left-domain). Non-finite values and rank-deficient step systems map
    to the remaining divergence reasons, and exhausting max_iters to
    'max-iterations'.
    """
    if settings is None:
        settings = GaussNewtonSettings()
    a = np.asarray(alpha0, dtype=float).copy()
    _check_alpha(a)
    lo, hi = settings.eta, 1.0 - settings.eta

    g = problem.data_vector()
    gmax = float(np.max(np.abs(g))) if g.size else 0.0
    if gmax > 0.0:
        w = 1.0 / np.maximum(np.abs(g), _WEIGHT_FLOOR * gmax)
    else:
        w = np.ones_like(g)

    iterates = [a.copy()]
    rnorms: list[float] = []
    status = "diverged"
    reason: str | None = None
    clip_events = 0

    try:
        r = _observed_vector(problem, a) - g
    except (NumericalBlowUpError, StepSolveError):
        r = np.array([np.nan])
    rnorms.append(float(np.linalg.norm(r)))
    if not np.all(np.isfinite(r)):
        return _finish(status, "non-finite", iterates, rnorms, truth)

    for _ in range(settings.max_iters):
        try:
            jac = _fd_columns(problem, a, r + g, settings.fd_step, settings.eta)
        except (NumericalBlowUpError, StepSolveError):
            reason = "non-finite"
            break
        if not np.all(np.isfinite(jac)):
            reason = "non-finite"
            break
        try:
            s = gauss_newton_step(jac * w[:, None], r * w)
        except SingularStepError:
            reason = "singular-step"
            break
        if float(np.linalg.norm(s)) > _STEP_NORM_CAP:
            reason = "left-domain"
            break

        raw = a + s
        event = bool(np.any(raw < lo) or np.any(raw > hi))
        if event:
            clip_events += 1
        new = np.clip(raw, lo, hi)
        moved = float(np.linalg.norm(new - a))
        a = new
        iterates.append(a.copy())

        if event and clip_events > _CLIP_RESCUES:
            rnorms.append(_safe_rnorm(problem, a, g))
            reason = "left-domain"
            break
        try:
            r = _observed_vector(problem, a) - g
        except (NumericalBlowUpError, StepSolveError):
            rnorms.append(float("nan"))
            reason = "non-finite"
            break
        rnorms.append(float(np.linalg.norm(r)))
        if not np.all(np.isfinite(r)):
            reason = "non-finite"
            break
        if moved <= settings.eps_stop:
            if event:
                reason = "left-domain"
            else:
                status = "converged"
            break
    else:
        reason = "max-iterations"

    return _finish(status, reason, iterates, rnorms, truth)


def _finish(status: str, reason: str | None, iterates: list,
            rnorms: list, truth) -> ReconstructionResult:
    hist = np.asarray(iterates)
    final = hist[-1]
    rel = None
    if truth is not None:
        t = np.asarray(truth, dtype=float)
        rel = np.abs(final - t) / t * 100.0
    return ReconstructionResult(
        status=status,
        reason=reason,
        alpha_star=final,
        iterations=hist.shape[0] - 1,
        iterate_history=hist,
        residual_norm_history=np.asarray(rnorms),
        rel_err_pct=rel,
    )
