"""Exception types shared across the workbench."""


class TowbError(Exception):
    """Base class for workbench errors."""


class DomainError(TowbError):
    """An operation was evaluated outside its mathematical domain
    (degenerate branch, weight below the positivity floor, non-probability
    input, depth limits exceeded, ...)."""


class ConvergenceError(TowbError):
    """An iterative solver failed to reach its tolerance."""


class ConfigError(TowbError):
    """A run configuration failed to parse or validate.

    Carries optional location info so the CLI can point at the offending
    line or field.
    """

    def __init__(self, message: str, line: int | None = None,
                 field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
