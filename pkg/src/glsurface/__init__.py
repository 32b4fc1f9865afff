"""Spectral and variational quantities of half-space Ginzburg-Landau surface
superconductivity: the de Gennes constant, the 1D reduced energy, the
angle-dependent threshold zeta(nu), magnetic-periodic lattice states and
finite-box GL energies."""

from .exceptions import ConvergenceError, GLSurfaceError, GridError, Violation

__all__ = ["ConvergenceError", "GLSurfaceError", "GridError", "Violation"]
