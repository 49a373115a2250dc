"""Spectral Galerkin simulation of the cascade."""

from .backend import HAVE_COMPILED, default_backend
from .model import (
    SCHEMES,
    Disturbance,
    GalerkinOperator,
    SimConfig,
    SineBasis,
    SpectralState,
    Trajectory,
    lift,
    lyapunov_V,
    p12_coefficients,
    project,
    rhs,
    simulate,
    simulate_heat_extension,
    step,
)

__all__ = [
    "HAVE_COMPILED",
    "SCHEMES",
    "Disturbance",
    "GalerkinOperator",
    "SimConfig",
    "SineBasis",
    "SpectralState",
    "Trajectory",
    "default_backend",
    "lift",
    "lyapunov_V",
    "p12_coefficients",
    "project",
    "rhs",
    "simulate",
    "simulate_heat_extension",
    "step",
]
