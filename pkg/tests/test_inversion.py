"""Gauss-Newton order reconstruction tests."""

import dataclasses

import numpy as np
import pytest

import fracorder.inversion as inversion
from fracorder.experiments import bump_initial_values
from fracorder.forward import ObservationSeries, observe, solve_forward
from fracorder.grids import SpatialGrid, TimeGrid
from fracorder.inversion import (GaussNewtonSettings, InverseProblem,
                                 ReconstructionResult, SingularStepError,
                                 gauss_newton_step, jacobian_fd, reconstruct,
                                 residual)
from fracorder.system import SystemConfig

TRUTH = np.array([0.9, 0.5])


def _history_lengths_consistent(result: ReconstructionResult) -> bool:
    n = result.iterations + 1
    return (result.iterate_history.shape[0] == n
            and result.residual_norm_history.shape[0] == n)


def test_residual_vanishes_at_the_true_orders(problem_a, problem_c):
    assert np.linalg.norm(residual(TRUTH, problem_a)) <= 1e-10
    assert np.linalg.norm(residual(TRUTH, problem_c)) <= 1e-10


def test_residual_length_is_samples_times_observed(problem_a, problem_c):
    assert residual(TRUTH, problem_a).shape == (100,)
    assert residual(TRUTH, problem_c).shape == (200,)


def test_residual_sees_perturbed_orders(problem_a):
    r = residual([0.85, 0.5], problem_a)
    assert np.linalg.norm(r) > 1e-4


def test_residual_rejects_orders_outside_the_open_box(problem_a):
    for bad in ([1.0, 0.5], [0.9, 0.0], [-0.1, 0.5], [0.9, 1.3]):
        with pytest.raises(ValueError):
            residual(bad, problem_a)


def test_jacobian_matches_central_differences(problem_c):
    alpha = np.array([0.6, 0.45])
    jac = jacobian_fd(alpha, problem_c, fd_step=1e-6)
    h = 1e-5
    for k in range(2):
        lo, hi = alpha.copy(), alpha.copy()
        lo[k] -= h
        hi[k] += h
        central = (residual(hi, problem_c) - residual(lo, problem_c)) / (2 * h)
        gap = np.linalg.norm(jac[:, k] - central)
        assert gap <= 1e-3 * np.linalg.norm(central)


def test_jacobian_duplicate_observed_component_repeats_rows(k2_setup):
    config, _, field = k2_setup
    problem = InverseProblem.from_config(config, observe(field, (1, 1), 0.5))
    jac = jacobian_fd(TRUTH, problem, fd_step=1e-6)
    assert jac.shape == (200, 2)
    assert np.array_equal(jac[:100], jac[100:])


def test_jacobian_costs_one_base_plus_one_solve_per_order(problem_c,
                                                          monkeypatch):
    calls = []
    true_solve = inversion.solve_forward

    def counting(config):
        calls.append(config.alpha.copy())
        return true_solve(config)

    monkeypatch.setattr(inversion, "solve_forward", counting)
    jacobian_fd(np.array([0.6, 0.45]), problem_c, fd_step=1e-6)
    assert len(calls) == 3


def test_normal_step_on_constant_columns():
    J = np.ones((7, 1))
    r = np.ones(7)
    s = gauss_newton_step(J, r)
    assert s.shape == (1,)
    assert s[0] == pytest.approx(-1.0, rel=1e-12)


def test_normal_step_with_orthonormal_columns():
    rng = np.random.default_rng(5)
    q, _ = np.linalg.qr(rng.normal(size=(7, 2)))
    r = rng.normal(size=7)
    s = gauss_newton_step(q, r)
    assert np.allclose(s, -q.T @ r, rtol=1e-12, atol=1e-14)


def test_rank_deficient_step_raises():
    col = np.arange(1.0, 8.0)
    with pytest.raises(SingularStepError):
        gauss_newton_step(np.stack([col, col], axis=1), np.ones(7))
    with pytest.raises(SingularStepError):
        gauss_newton_step(np.zeros((7, 2)), np.ones(7))


def test_reconstruction_from_the_standard_start(problem_a):
    result = reconstruct([0.5, 0.5], problem_a,
                         GaussNewtonSettings(max_iters=10), truth=TRUTH)
    assert result.converged
    assert result.label == "converged"
    assert result.reason is None
    assert result.iterations <= 10
    assert np.all(np.abs(result.alpha_star - TRUTH) <= 1e-5)
    assert np.all(result.rel_err_pct <= 0.2)
    assert _history_lengths_consistent(result)


def test_truth_is_a_fixed_point(problem_a):
    result = reconstruct(TRUTH, problem_a)
    assert result.converged
    assert result.iterations <= 1
    assert np.all(np.abs(result.alpha_star - TRUTH) <= 1e-9)


def test_residual_norms_decrease_along_a_convergent_run(problem_c):
    result = reconstruct([0.5, 0.5], problem_c,
                         GaussNewtonSettings(max_iters=10))
    assert result.converged
    assert np.all(np.diff(result.residual_norm_history) <= 1e-12)


def test_far_start_leaves_the_domain_immediately(problem_a):
    result = reconstruct([0.1, 0.1], problem_a,
                         GaussNewtonSettings(max_iters=10))
    assert result.status == "diverged"
    assert result.reason == "left-domain"
    assert result.label == "diverged(left-domain)"
    assert result.iterations == 0
    assert _history_lengths_consistent(result)


def test_unobserved_decoupled_component_gives_singular_step():
    space = SpatialGrid(L=1.0, M=100)
    time = TimeGrid(T=1.0, N=100)
    config = SystemConfig(alpha=TRUTH.copy(), coupling=np.zeros((2, 2)),
                          diffusion=np.ones(2),
                          u0=bump_initial_values(2, space),
                          space=space, time=time)
    field = solve_forward(config)
    problem = InverseProblem.from_config(config, observe(field, (1,), 0.5))
    result = reconstruct([0.5, 0.5], problem,
                         GaussNewtonSettings(max_iters=10))
    assert result.label == "diverged(singular-step)"
    assert _history_lengths_consistent(result)


def test_nonfinite_data_is_reported_before_iterating(problem_a):
    values = problem_a.data.values.copy()
    values[0, 3] = np.inf
    data = dataclasses.replace(problem_a.data, values=values)
    problem = dataclasses.replace(problem_a, data=data)
    result = reconstruct([0.5, 0.5], problem)
    assert result.label == "diverged(non-finite)"
    assert result.iterations == 0
    assert _history_lengths_consistent(result)


def test_exhausting_the_iteration_budget(problem_a):
    result = reconstruct([0.5, 0.5], problem_a,
                         GaussNewtonSettings(max_iters=2))
    assert result.label == "diverged(max-iterations)"
    assert result.iterations == 2
    assert _history_lengths_consistent(result)


def test_reconstruction_is_symmetric_under_component_relabeling(k2_setup):
    config, _, field = k2_setup
    swapped = SystemConfig(alpha=config.alpha[::-1].copy(),
                           coupling=config.coupling,
                           diffusion=config.diffusion,
                           u0=config.u0[::-1].copy(),
                           space=config.space, time=config.time)
    mirror_field = solve_forward(swapped)

    direct = reconstruct([0.5, 0.5], InverseProblem.from_config(
        config, observe(field, (1,), 0.5)),
        GaussNewtonSettings(max_iters=10))
    mirror = reconstruct([0.5, 0.5], InverseProblem.from_config(
        swapped, observe(mirror_field, (2,), 0.5)),
        GaussNewtonSettings(max_iters=10))
    assert direct.converged and mirror.converged
    assert np.max(np.abs(direct.alpha_star - mirror.alpha_star[::-1])) <= 1e-10


def test_settings_validation():
    with pytest.raises(ValueError):
        GaussNewtonSettings(eps_stop=0.0)
    with pytest.raises(ValueError):
        GaussNewtonSettings(fd_step=0.0)
    with pytest.raises(ValueError):
        GaussNewtonSettings(max_iters=0)
    with pytest.raises(ValueError):
        GaussNewtonSettings(eta=0.5)


def test_problem_validation(k2_setup):
    config, _, field = k2_setup
    series = observe(field, (1,), 0.5)
    with pytest.raises(ValueError):
        InverseProblem(coupling=config.coupling, diffusion=config.diffusion,
                       u0=config.u0, space=config.space, time=config.time,
                       data=series, observed=(1, 2))
    short = dataclasses.replace(series, values=series.values[:, :-1])
    with pytest.raises(ValueError):
        InverseProblem.from_config(config, short)


def test_weighted_normal_equations_match_the_misfit_gradient(problem_c):
    # J^T r equals the gradient of 0.5 |r|^2; compare against central
    # differences of the scalar misfit
    alpha = np.array([0.62, 0.41])
    r = residual(alpha, problem_c)
    jac = jacobian_fd(alpha, problem_c, fd_step=1e-6)
    grad = jac.T @ r
    h = 1e-5
    for k in range(2):
        lo, hi = alpha.copy(), alpha.copy()
        lo[k] -= h
        hi[k] += h
        phi_hi = 0.5 * np.sum(residual(hi, problem_c) ** 2)
        phi_lo = 0.5 * np.sum(residual(lo, problem_c) ** 2)
        fd = (phi_hi - phi_lo) / (2 * h)
        assert abs(grad[k] - fd) <= 1e-3 * abs(fd)
