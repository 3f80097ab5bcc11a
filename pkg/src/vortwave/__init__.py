"""Steady periodic water waves with general vorticity on a conformal strip."""

from .continuation import (BranchPoint, BranchResult, Constraint, ContinuationConfig, bifurcation_tangent,
                           continue_branch, detect_secondary_bifurcation, newton_correct)
from .diagnostics import WaveReport, downstream_check, f_field, nodal_check, stagnation_scan, wave_report
from .elliptic import compute_A, poisson_strip
from .kernels import BACKEND
from .laminar import dispersion, find_bifurcation, kernel_multiplicity, solve_beta, solve_laminar
from .operator import (AdmissibilityError, Discretization, Problem, State, apply_F, flattened_bernoulli_gap,
                       linearize_trivial, linearized_L, physical_oracle, residual, t_isomorphism)
from .spectral import PeriodicScalar, StripField, hilbert_strip, hilbert_strip_inverse
from .vorticity import VorticityModel

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError", "BACKEND", "BranchPoint", "BranchResult", "Constraint", "ContinuationConfig",
    "Discretization", "PeriodicScalar", "Problem", "State", "StripField", "VorticityModel", "WaveReport",
    "apply_F", "bifurcation_tangent", "compute_A", "continue_branch", "detect_secondary_bifurcation",
    "dispersion", "downstream_check", "f_field", "find_bifurcation", "flattened_bernoulli_gap",
    "hilbert_strip", "hilbert_strip_inverse", "kernel_multiplicity", "linearize_trivial", "linearized_L",
    "newton_correct", "nodal_check", "physical_oracle", "poisson_strip", "residual", "solve_beta",
    "solve_laminar", "stagnation_scan", "t_isomorphism", "wave_report",
]
