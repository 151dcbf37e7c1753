"""Exception types shared across the package."""


class FintraceError(Exception):
    """Base class for package errors."""


class CatalogError(FintraceError):
    """Unknown symbol, wrong arity, or predicate/function kind mismatch."""


class TraceParseError(FintraceError):
    """Malformed trace text. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CaseBaseError(FintraceError):
    """Invalid training input (missing class, unlabeled trace, ...)."""


class PlanningError(FintraceError):
    """No plan template applies, or precondition repair failed."""


class ExecutionError(FintraceError):
    """A plan action's preconditions do not hold in a deterministic run."""
