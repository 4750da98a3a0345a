"""Periodically stationary pulses in a lumped fiber-laser model.

Find pulses that repeat each round trip up to a constant phase, via
adjoint-gradient optimization of the round-trip mismatch, and assess their
linear stability from the spectrum of the (modified) monodromy operator.
"""

__version__ = "0.1.0"

from .cavity import (LaserConfig, RoundTripOutput, default_config,
                     modified_monodromy_apply, monodromy_adjoint_apply,
                     monodromy_apply, round_trip)
from .components import (DispersionParams, OutputCouplerParams,
                         SaturableAbsorberParams, dcf_adjoint, dcf_apply,
                         oc_apply, sa_adjoint, sa_apply, sa_linearized)
from .fiber import (FiberParams, FiberPropagationError, StepPolicy, Trajectory,
                    gain, gain_rate_g2, kerr_step, linear_half_step,
                    propagate_adjoint, propagate_linearized, propagate_nonlinear)
from .grid import (FastTimeGrid, Field, SpectralField, energy,
                   forward_transform, hermitian_inner, inner, inverse_transform)
from .optimize import (OptimizerReport, PoincareEvaluation, continuation_sweep,
                       evaluate_poincare, evolve_stage, gaussian_seed, optimize,
                       pulse_metrics)
from .spectrum import (EssentialSpectrumCurve, MonodromyMatrix, SpectrumReport,
                       assemble_matrix, classify, eigendecompose,
                       essential_curve, theoretical_eigenpairs)
from .verify import (ConvergenceStudy, FornbergCheck, adjoint_pairing_audit,
                     convergence_study, fornberg_derivative, gradient_fd_check)

__all__ = [name for name in dir() if not name.startswith("_")]
