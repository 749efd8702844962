"""Simulation of weakly coupled time-fractional subdiffusion systems
and simultaneous reconstruction of all fractional orders from pointwise
observations."""

from .analytic import (ConvergenceRow, MLQuery, analytic_single_component,
                       convergence_study, mittag_leffler)
from .forward import (ObservationSeries, SolutionField, apply_noise,
                      export_field_csv, observe, solve_forward, step_system)
from .grids import SpatialGrid, TimeGrid
from .inversion import (GaussNewtonSettings, InverseProblem,
                        ReconstructionResult, SingularStepError,
                        gauss_newton_step, jacobian_fd, reconstruct, residual)
from .l1 import L1Weights, l1_weights
from .marching import NumericalBlowUpError, StepSolveError, kernel_name
from .experiments import (CASE_COMPONENTS, CaseSpec, ExperimentReport,
                          RunRow, SweepSpec, derive_seed, emit_report,
                          reference_config_k2, reference_config_k3, run_case,
                          run_sweep)
from .system import (SystemConfig, UniquenessReport,
                     validate_uniqueness_conditions)

__version__ = "0.1.0"

__all__ = [
    "CASE_COMPONENTS", "CaseSpec", "ConvergenceRow", "ExperimentReport",
    "GaussNewtonSettings", "InverseProblem", "L1Weights", "MLQuery",
    "NumericalBlowUpError", "ObservationSeries", "ReconstructionResult",
    "RunRow", "SingularStepError", "SolutionField", "SpatialGrid",
    "StepSolveError", "SweepSpec", "SystemConfig", "TimeGrid",
    "UniquenessReport", "analytic_single_component", "apply_noise",
    "convergence_study", "derive_seed", "emit_report", "export_field_csv",
    "gauss_newton_step", "jacobian_fd", "kernel_name", "l1_weights",
    "mittag_leffler", "observe", "reconstruct", "reference_config_k2",
    "reference_config_k3", "residual", "run_case", "run_sweep",
    "solve_forward", "step_system", "validate_uniqueness_conditions",
]
