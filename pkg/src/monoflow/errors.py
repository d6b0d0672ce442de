"""Exception hierarchy shared by every module."""


class MonoflowError(Exception):
    """Base class for all errors raised by this package."""


class MalformedSpec(MonoflowError, ValueError):
    pass


class NotMonotone(MonoflowError, ValueError):
    pass


class NonConvergedSolve(MonoflowError, RuntimeError):
    pass


class NonConvergedLimit(MonoflowError, RuntimeError):
    pass


class NotForwardCapable(MonoflowError, ValueError):
    pass


class NotInDomain(MonoflowError, ValueError):
    pass


class UnknownSolutionSet(MonoflowError, ValueError):
    pass


class NoObjective(MonoflowError, ValueError):
    pass


class MalformedSchedule(MonoflowError, ValueError):
    pass


class StepTooLarge(MonoflowError, ValueError):
    pass


class BudgetExceeded(MonoflowError, RuntimeError):
    pass


class OutOfRange(MonoflowError, ValueError):
    pass


class OperatorMismatch(MonoflowError, ValueError):
    pass


class WrongOperatorKind(MonoflowError, ValueError):
    pass


class NotASolution(MonoflowError, ValueError):
    pass


class NoVelocities(MonoflowError, ValueError):
    pass


class InvalidProbe(MonoflowError, ValueError):
    pass


class EmptyInput(MonoflowError, ValueError):
    pass


class TooShort(MonoflowError, ValueError):
    pass


class ParseError(MonoflowError, ValueError):
    """Config text could not be parsed; carries a 1-based line/column when known."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class ValidationError(MonoflowError, ValueError):
    pass


class UnknownColumn(MonoflowError, KeyError):
    pass
