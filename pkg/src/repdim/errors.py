"""Exception hierarchy.

Every error raised on bad input derives from :class:`ValidationError`;
resource and convergence problems derive from :class:`ComputationError`.
The CLI maps the first family to exit code 1 and the second to exit code 2.
"""


class RepdimError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(RepdimError, ValueError):
    pass


class ComputationError(RepdimError):
    pass


class MalformedSystem(ValidationError):
    pass


class AlphabetTooSmall(ValidationError):
    pass


class PartitionError(ValidationError):
    pass


class PartitionGap(PartitionError):
    pass


class PartitionOverlap(PartitionError):
    pass


class NotExpanding(ValidationError):
    pass


class DominationViolated(ValidationError):
    pass


class ImageEscapes(ValidationError):
    pass


class NotMarkov(ValidationError):
    pass


class EmptyCylinder(ValidationError):
    pass


class NoCycle(ValidationError):
    pass


class ExponentOrderViolated(ValidationError):
    pass


class ExpansionTooWeak(ValidationError):
    pass


class BadAssignment(ValidationError):
    pass


class NonIntegerBeta(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class DegenerateDenominator(ValidationError):
    pass


class NotPrimitive(ValidationError):
    pass


class NotRecurrent(ValidationError):
    pass


class TooShallow(ValidationError):
    pass


class DegenerateFit(ValidationError):
    pass


class BadDimensions(ValidationError):
    pass


class BudgetExceeded(ComputationError):
    pass


class NonConvergence(ComputationError):
    pass
