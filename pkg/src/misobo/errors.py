"""Exception types raised by the library."""


class MisoboError(Exception):
    """Base class for all library errors."""


class BoundsError(MisoboError, ValueError):
    """A raw coordinate fell outside its dimension's bounds."""


class IllConditionedKernelError(MisoboError):
    """Cholesky factorization failed even after jitter escalation."""


class NumericalInstabilityError(MisoboError):
    """A computed posterior variance was negative beyond tolerance."""


class ObjectiveEvaluationError(MisoboError):
    """An acquisition objective returned a non-finite value.

    Attributes
    ----------
    point : ndarray
        The offending query point.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class ProposalFailureError(MisoboError):
    """No valid (source, location) proposal could be produced."""


class EmptyAugmentedSetError(MisoboError):
    """The augmented training set came out empty."""


class UndefinedIncumbentError(MisoboError):
    """An incumbent was requested before any qualifying evaluation exists."""


class SourceEvaluationError(MisoboError):
    """Querying an information source failed (bad reply, crash, timeout)."""


class InitializationError(MisoboError):
    """A source failed while evaluating the initial design."""


class RunAbortedError(MisoboError):
    """An optimization run stopped early because a source query failed.

    The trace rows produced before the failure have already been handed to
    the sink, so the run can be resumed from the persisted trace.

    Attributes
    ----------
    cause : Exception
        The underlying source failure.
    completed_iterations : int
        Loop iterations fully recorded before the failure.
    """

    def __init__(self, message, cause=None, completed_iterations=0):
        super().__init__(message)
        self.cause = cause
        self.completed_iterations = completed_iterations


class ConfigValidationError(MisoboError):
    """An experiment config failed validation.

    Attributes
    ----------
    violations : list of str
        Every violation found, not just the first.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid config: " + "; ".join(self.violations))
