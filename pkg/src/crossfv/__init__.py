"""crossfv: finite-volume simulation of two-species cross-diffusion
with viscous (Brinkman) and inviscid (darcy) pressure coupling, plus a
verification harness for the scheme's conservation, maximum-principle,
entropy-dissipation, and vanishing-viscosity properties.
"""

from .kernels import BACKEND
from .fields import (Grid, ScalarField, FaceField, SecondMomentWeight,
                     PERIODIC, NOFLUX, build_grid, gradient, divergence,
                     integrate, face_dot, face_average)
from .tensors import (TensorField, ValidationReport, identity_tensor,
                      diagonal_tensor, rotation_tensor, smooth_tensor,
                      tensor_from_arrays, validate_tensor, apply_tensor)
from .brinkman import (BrinkmanOperator, SolverConfig, SolverError,
                       solve_brinkman, velocity, brinkman_consistency)
from .evolution import (GrowthLaw, State, StepperConfig, StepError,
                        upwind_flux, reaction, stable_dt, step, run,
                        nbar_ceiling, growth_sup)
from .diagnostics import (DiagnosticsRecord, EntropyAudit, AuditTrace,
                          RunRecorder, FieldCapture, entropy,
                          dissipation_rate, dissipation_kinetic,
                          second_moment, overlap, l2_distance,
                          face_l2_distance, face_l2_norm, entropy_audit,
                          reaction_entropy_rate)
from .config import (SimConfig, ConfigError, parse_config, serialize_config,
                     config_digest, build_grid_from, build_tensor,
                     build_laws, build_initial)
from .harness import (RunResult, SweepRow, ConvergenceTable, RateFit,
                      RefinementReport, run_single, run_sweep,
                      run_refinement, fit_rate, fit_rate_ci, restrict_to,
                      initial_state, SWEEP_SAMPLES)
from .cli import main

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "__version__",
    "Grid", "ScalarField", "FaceField", "SecondMomentWeight",
    "PERIODIC", "NOFLUX", "build_grid", "gradient", "divergence",
    "integrate", "face_dot", "face_average",
    "TensorField", "ValidationReport", "identity_tensor", "diagonal_tensor",
    "rotation_tensor", "smooth_tensor", "tensor_from_arrays",
    "validate_tensor", "apply_tensor",
    "BrinkmanOperator", "SolverConfig", "SolverError", "solve_brinkman",
    "velocity", "brinkman_consistency",
    "GrowthLaw", "State", "StepperConfig", "StepError", "upwind_flux",
    "reaction", "stable_dt", "step", "run", "nbar_ceiling", "growth_sup",
    "DiagnosticsRecord", "EntropyAudit", "AuditTrace", "RunRecorder",
    "FieldCapture", "entropy", "dissipation_rate", "dissipation_kinetic",
    "second_moment", "overlap", "l2_distance", "face_l2_distance",
    "face_l2_norm", "entropy_audit", "reaction_entropy_rate",
    "SimConfig", "ConfigError", "parse_config", "serialize_config",
    "config_digest", "build_grid_from", "build_tensor", "build_laws",
    "build_initial",
    "RunResult", "SweepRow", "ConvergenceTable", "RateFit",
    "RefinementReport", "run_single", "run_sweep", "run_refinement",
    "fit_rate", "fit_rate_ci", "restrict_to", "initial_state",
    "SWEEP_SAMPLES",
    "main",
]
