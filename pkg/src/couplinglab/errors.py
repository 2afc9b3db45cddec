"""Exception hierarchy shared by all couplinglab modules."""


class CouplingLabError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(CouplingLabError, ValueError):
    """A physical parameter or argument violates its documented constraints."""


class IncompatibleBasisError(CouplingLabError, ValueError):
    """An operator, state or matrix was paired with the wrong basis."""


class DomainError(CouplingLabError, ValueError):
    """The requested configuration lies outside the model's domain of validity."""


class NumericError(CouplingLabError, ArithmeticError):
    """An iterative or dense solver failed to reach the requested accuracy."""


class NoMetastableQubitError(CouplingLabError):
    """Fewer than two states are localized in the shallow potential well."""


class AmbiguousWellError(NoMetastableQubitError):
    """The double well is symmetric, so no well can be called the shallow one."""


class EmptyResultError(CouplingLabError):
    """Every point of a sweep failed."""
