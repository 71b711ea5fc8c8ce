class ParameterError(ValueError):
    """Input outside the documented domain of an operation."""


class NumericalFailure(RuntimeError):
    """A numerical certificate (conservation, holonomy, fit residual) failed."""


class ContractViolation(RuntimeError):
    """An internal consistency contract between two routes was broken."""
