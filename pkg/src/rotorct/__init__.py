"""Rotating pressureless Euler flows: critical thresholds, velocity-gradient
dynamics, exact particle paths and a kinetic BGK formulation."""
from .errors import (CFLViolation, ConfigInvalid, DegenerateEigenvectors, DegenerateOrbit,
                     InconsistentInitialPair, MaxStepsExceeded, NoConvergence, NotEquilibrium,
                     OutOfDomain, PhiZero, RotorCTError, SingularJacobian, SupercriticalData,
                     TailMassExceeded)
from .fields import FieldSpec, GradientState, eigen2, grad_analysis, spectral_pairing_ratio
from .threshold import Verdict, classify_field, threshold_report
from .spectral_ode import SolverConfig, SpectralState, integrate
from .period import period_quadrature
from .flowmap import first_singularity, flow_map

__version__ = "0.1.0"

__all__ = [
    "CFLViolation", "ConfigInvalid", "DegenerateEigenvectors", "DegenerateOrbit",
    "InconsistentInitialPair", "MaxStepsExceeded", "NoConvergence", "NotEquilibrium",
    "OutOfDomain", "PhiZero", "RotorCTError", "SingularJacobian", "SupercriticalData",
    "TailMassExceeded", "FieldSpec", "GradientState", "eigen2", "grad_analysis",
    "spectral_pairing_ratio", "Verdict", "classify_field", "threshold_report", "SolverConfig",
    "SpectralState", "integrate", "period_quadrature", "first_singularity", "flow_map",
]
