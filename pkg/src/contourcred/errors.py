"""Exception types shared across the package."""


class ContourCredError(Exception):
    """Base class for all package errors."""


class InputError(ContourCredError):
    """Invalid user input: bad files, bad parameters, inconsistent shapes."""


class DegenerateMeshError(InputError):
    """Mesh cannot support the requested construction."""


class UnsupportedSmoothnessError(InputError):
    """Smoothness order outside the supported set {1, 2}."""


class LocationError(InputError):
    """A coordinate falls outside the triangulation hull."""


class ConstantFieldError(InputError):
    """Point-estimate values are constant, so contour levels are undefined."""


class ComputationError(ContourCredError):
    """Numerical failure during a computation."""


class NotPositiveDefiniteError(ComputationError):
    """Factorization hit a non-positive pivot."""


class ContractViolationError(ComputationError):
    """An internal precondition was violated by the caller."""
