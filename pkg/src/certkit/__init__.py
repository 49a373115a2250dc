"""Stability certificates and Galerkin simulation for boundary-driven ODE-PDE cascades."""

__version__ = "0.1.0"
