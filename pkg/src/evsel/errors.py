"""Exception hierarchy and the process exit codes attached to each family."""

from __future__ import annotations


class EvselError(Exception):
    """Base class for all package-specific errors."""

    exit_code = 1


class ConfigError(EvselError):
    """Bad configuration: unknown key, type mismatch, out-of-range value."""

    exit_code = 2


class DataError(EvselError):
    """Problems with corpus, query, pool or score files."""

    exit_code = 3


class ParseError(DataError):
    """Malformed record in an input file; carries the offending location."""

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix += str(path)
        if line is not None:
            prefix += f":{line}"
        super().__init__(f"{prefix}: {message}" if prefix else message)


class IntegrityError(DataError):
    """Cross-reference or invariant violation in otherwise parseable data."""


class RetrievalError(DataError):
    """Retrieval cannot proceed, e.g. a query that tokenizes to nothing."""


class RolloutError(EvselError):
    """A generator rollout failed; carries the rollout index within its batch."""

    def __init__(self, index: int, message: str):
        self.index = index
        super().__init__(f"rollout {index}: {message}")


class EndpointError(EvselError):
    """Remote endpoint failure after retries were exhausted."""

    exit_code = 4


class EndpointTimeoutError(EndpointError):
    """Remote endpoint timed out."""


class UnsupportedModeError(EvselError):
    """Operation requires a labeled (simulator-capable) corpus."""


class UnsupportedTrainingError(EvselError):
    """Training was requested against a backend that cannot be trained."""


class TrainingError(EvselError):
    """Optimization produced a non-finite update; carries a diagnostic dump."""

    exit_code = 5

    def __init__(self, message: str, diagnostics: dict | None = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)
