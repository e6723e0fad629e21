"""crossdiff: finite-volume simulation and estimate-verifying diagnostics
for a two-species cross-diffusion system with fast-diffusion pressure on
the periodic unit interval."""

from .grid import Field, GridSpec, div_cell, grad_interface, integrate, make_grid, shift
from .model import (InitialData, Nonlinearity, PotentialPair, ProblemSpec,
                    build_potentials, validate_initial)
from .transforms import (SumRatioState, from_sum_ratio, imbalance_kernels,
                         shifted_gradient, to_sum_ratio)
from .solver import (SolverError, State, StepRecord, Trajectory, advance,
                     cfl_dt, interface_velocities, run, step_explicit,
                     step_semi_implicit)
from .diagnostics import (DiagnosticsReport, TestFunctionBank, build_report,
                          bv_norms, dissipation_beta, energy, entropy,
                          equicontinuity_moduli, lebesgue_norms,
                          make_test_bank, weak_residual)
from .study import StudyPlan, StudyReport, fit_rate, prolong, run_study

__version__ = "0.1.0"

__all__ = [
    "Field", "GridSpec", "div_cell", "grad_interface", "integrate",
    "make_grid", "shift",
    "InitialData", "Nonlinearity", "PotentialPair", "ProblemSpec",
    "build_potentials", "validate_initial",
    "SumRatioState", "from_sum_ratio", "imbalance_kernels",
    "shifted_gradient", "to_sum_ratio",
    "SolverError", "State", "StepRecord", "Trajectory", "advance", "cfl_dt",
    "interface_velocities", "run", "step_explicit", "step_semi_implicit",
    "DiagnosticsReport", "TestFunctionBank", "build_report", "bv_norms",
    "dissipation_beta", "energy", "entropy", "equicontinuity_moduli",
    "lebesgue_norms", "make_test_bank", "weak_residual",
    "StudyPlan", "StudyReport", "fit_rate", "prolong", "run_study",
    "__version__",
]
