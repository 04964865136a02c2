"""Exception types raised across the package."""


class QuadfreeError(Exception):
    """Base class for all package errors."""


class NotCoprime(QuadfreeError, ValueError):
    pass


class NonCoprimeModuli(QuadfreeError, ValueError):
    pass


class Overflow(QuadfreeError, OverflowError):
    pass


class NotIrrational(QuadfreeError, ValueError):
    pass


class NotIntersective(QuadfreeError, ValueError):
    pass


class ElementOutOfRange(QuadfreeError, ValueError):
    pass


class DegenerateRange(QuadfreeError, ValueError):
    pass


class QuadratureNonConvergence(QuadfreeError, RuntimeError):
    pass


class BudgetExceeded(QuadfreeError, RuntimeError):
    pass


class RangeError(QuadfreeError, ValueError):
    pass


class PreconditionFailed(QuadfreeError, ValueError):
    pass


class EmptyMajorMass(QuadfreeError, RuntimeError):
    pass


class DegenerateTriple(QuadfreeError, RuntimeError):
    pass


class HypothesisViolated(UserWarning):
    """Issued when an estimate is evaluated outside its proven regime."""


class WitnessSearchExhausted(UserWarning):
    """Issued when a non-intersective polynomial has no witness within the search cap."""
