"""Exception hierarchy.

Validation problems (bad parameters) derive from ``ValidationError`` and map
to CLI exit code 2. Numerical failures derive from ``NumericalError`` and map
to exit code 3.
"""


class ValidationError(ValueError):
    """Input outside the domain of an operation."""


class DomainError(ValidationError):
    pass


class GridMismatchError(ValidationError):
    pass


class NumericalError(RuntimeError):
    """A computation ran but could not produce a trustworthy result."""


class NoRootError(NumericalError):
    pass


class BlowUpError(NumericalError):
    """Soliton width collapsed to zero during integration."""


class SolitonBreakdownError(NumericalError):
    """|g N| fell to 1 or below, where the sech description is invalid."""


class ConvergenceError(NumericalError):
    pass


class BoxTooSmallError(NumericalError):
    pass


class NormDriftError(NumericalError):
    pass


class UndefinedBoundError(NumericalError):
    """Speed-limit time requested with non-positive shortcut energy."""
