"""Time-averaged quantum-jump super-operators from microscopic photodetector models."""

__version__ = "0.1.0"

from .fock import (DiagonalF, DimensionError, JumpSpec, TruncationError, apply_jump,
                   build_ladder_ops, fock_projector, phase_ops, validate_density_matrix)
from .jc import JCParams, fmn_jc, fnn_exact_jc, fnn_interp_jc, jc_evolution, jc_table
from .oscillator import (OscParams, Regime, fnn_asymptotic, fnn_integral_osc, fnn_small_chi,
                         fnn_steepest_descent, fnn_tricomi, osc_table, su11_coefficients,
                         su11_evolution)
from .quadrature import QuadratureSpec, integrate, tricomi_psi_3
from .tables import CoefficientTable, Model, Provenance, fit_power_law, implied_beta
from .trajectories import TrajectoryConfig, TrajectoryEnsemble, sample_first_jumps

__all__ = [
    "CoefficientTable", "DiagonalF", "DimensionError", "JCParams", "JumpSpec", "Model",
    "OscParams", "Provenance", "QuadratureSpec", "Regime", "TrajectoryConfig",
    "TrajectoryEnsemble", "TruncationError", "apply_jump", "build_ladder_ops",
    "fit_power_law", "fmn_jc", "fnn_asymptotic", "fnn_exact_jc", "fnn_integral_osc",
    "fnn_interp_jc", "fnn_small_chi", "fnn_steepest_descent", "fnn_tricomi",
    "fock_projector", "implied_beta", "integrate", "jc_evolution", "jc_table", "osc_table",
    "phase_ops", "sample_first_jumps", "su11_coefficients", "su11_evolution",
    "tricomi_psi_3", "validate_density_matrix",
]
