"""Exception hierarchy.

Validation problems (bad input, bad configuration) derive from
``ValidationError``; numerical failures at run time derive from
``NumericalError``. The CLI maps the former to exit status 1 and the latter
to exit status 2.
"""


class KaonTwfError(Exception):
    """Base class for all package errors."""


class ValidationError(KaonTwfError, ValueError):
    """An input violates a documented invariant."""


class ConfigError(ValidationError):
    """A configuration document is missing a field or has an ill-typed one."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class DomainError(ValidationError):
    """An argument lies outside the domain of the operation (e.g. t < 0)."""


class SingularPreparationError(ValidationError):
    """The T.W.F. pseudo-spinor basis is degenerate (eps_s * eps_l == 1)."""


class UnsupportedRegimeError(ValidationError):
    """The requested quantity is not defined by the model in this regime."""


class GridMismatchError(ValidationError):
    """Two curves were compared on different time grids."""


class ResolutionError(ValidationError):
    """A sampling grid is too coarse or too narrow for the requested result."""


class NumericalError(KaonTwfError, RuntimeError):
    """A numerical procedure failed at run time."""


class DegenerateError(NumericalError):
    """A ratio has a vanishing denominator."""


class IntegratorError(NumericalError):
    """The ODE integrator lost norm beyond tolerance."""


class EmptySectorError(ValidationError):
    """No channel is present at the requested frequency."""
