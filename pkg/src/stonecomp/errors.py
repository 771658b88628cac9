"""Exception hierarchy shared by every construction."""


class StoneError(Exception):
    """Base class for all library errors."""


class DomainError(StoneError, ValueError):
    """An argument lies outside the domain of an operation."""


class ParseError(StoneError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ScheduleError(StoneError, ValueError):
    """A removal schedule is inconsistent (re-adds a cone, removes the root...)."""


class ConstructionError(StoneError, RuntimeError):
    """A stage construction hit a state its promises exclude."""


class BudgetExceeded(StoneError, RuntimeError):
    """A bounded search ran out of budget before finding a witness."""


class InsufficientName(StoneError, ValueError):
    """A point name is too coarse for the requested output precision."""


class PreconditionError(StoneError, ValueError):
    """A caller-supplied promise (isolated point, 2-partition, ...) is false."""
