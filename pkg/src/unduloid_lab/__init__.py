"""Delaunay unduloids, conjugate cousins in S^3, and Jacobi-field bookkeeping."""
from .errors import ContractViolation, NumericalFailure, ParameterError

__version__ = "0.1.0"

__all__ = ["ContractViolation", "NumericalFailure", "ParameterError", "__version__"]
