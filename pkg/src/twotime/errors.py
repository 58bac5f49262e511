"""Exception hierarchy shared by every module of the package."""


class CollapseError(Exception):
    """Base class for all errors raised by :mod:`twotime`."""


class ValidationError(CollapseError, ValueError):
    """An input violates a structural contract (shape, Hermiticity, ...)."""


class ModelValidityError(ValidationError):
    """A model produces something that is not a probability."""


class ZeroWeightError(CollapseError):
    """A collapse record or history has zero weight, i.e. it is impossible."""


class IncompatibleBoundaryError(ZeroWeightError):
    """No record is compatible with the pair of boundary conditions."""


class CapacityError(CollapseError):
    """Exact enumeration would exceed the configured record cap."""


class NumericalError(CollapseError, ArithmeticError):
    """A numerical routine failed or two evaluation routes disagree."""
