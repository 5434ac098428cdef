from typing import Any, Dict, List, Optional


class QClockError(Exception):
    """Base class for every error raised by the toolkit."""


class InvalidArgumentError(QClockError, ValueError):
    pass


class UndefinedPhaseError(InvalidArgumentError):
    pass


class InsufficientDataError(InvalidArgumentError):
    pass


class SequenceAnalysisError(QClockError):
    pass


class FitError(QClockError):
    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigValidationError(QClockError):
    """
    Raised with every failure found while validating an experiment config,
    not just the first one.
    """

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("Invalid experiment config:\n" + "\n".join(f"  - {e}" for e in self.errors))
