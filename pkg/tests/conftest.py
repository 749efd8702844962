"""Shared fixtures. Sweeps and noisy reconstruction batches are the
expensive parts of the suite, so they run once per session and are
reused by both the module tests and the acceptance gate."""

import time

import pytest

from fracorder.experiments import (CaseSpec, SweepSpec, reference_config_k2,
                                   run_case, run_sweep)
from fracorder.forward import observe, solve_forward
from fracorder.inversion import InverseProblem


@pytest.fixture(scope="session")
def k2_setup():
    """Reference two-component system, its true orders, and the solved
    field at those orders."""
    config, truth = reference_config_k2()
    return config, truth, solve_forward(config)


@pytest.fixture(scope="session")
def problem_a(k2_setup):
    config, _, field = k2_setup
    return InverseProblem.from_config(config, observe(field, (1,), 0.5))


@pytest.fixture(scope="session")
def problem_c(k2_setup):
    config, _, field = k2_setup
    return InverseProblem.from_config(config, observe(field, (1, 2), 0.5))


@pytest.fixture(scope="session")
def sweep_reports_k2():
    return {lab: run_sweep(SweepSpec(case=CaseSpec(label=lab)))
            for lab in "ABC"}


@pytest.fixture(scope="session")
def sweep_reports_k3():
    """The three K = 3 sweeps plus their total wall time in seconds."""
    t0 = time.perf_counter()
    reports = {lab: run_sweep(SweepSpec(case=CaseSpec(label=lab)))
               for lab in "DEF"}
    return reports, time.perf_counter() - t0


@pytest.fixture(scope="session")
def clean_reports():
    """Noiseless single reconstructions per case and starting guess."""
    out = {}
    for alpha0 in ((0.5, 0.5), (0.7, 0.3)):
        for lab in "ABC":
            out[alpha0, lab] = run_case(CaseSpec(label=lab, alpha0s=(alpha0,)))
    return out


@pytest.fixture(scope="session")
def noisy_reports():
    """Ten-trial batches at 5% noise per case and starting guess."""
    out = {}
    for alpha0 in ((0.5, 0.5), (0.7, 0.3)):
        for lab in "ABC":
            out[alpha0, lab] = run_case(
                CaseSpec(label=lab, deltas=(0.05,), alpha0s=(alpha0,),
                         trials=10))
    return out
