"""
Exception hierarchy for the quermass toolkit
"""

from typing import Optional


class QuermassError(Exception):
    """Base class for every error raised by the toolkit"""


class RejectedInputError(QuermassError, ValueError):
    """An argument or a JSON field failed validation"""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        if field and field not in message:
            message = f"{field}: {message}"
        super().__init__(message)


class ConvergenceError(QuermassError, RuntimeError):
    """An iterative solver ran out of iterations before certifying its tolerance"""

    def __init__(self, message: str, achieved_gap: float, iterations: int):
        self.achieved_gap = achieved_gap
        self.iterations = iterations
        super().__init__(f"{message} (gap={achieved_gap:.3e} after {iterations} iterations)")


class UnsupportedOperationError(QuermassError, NotImplementedError):
    """The operation exists but not for this dimension or body kind"""


class IllConditionedFitError(QuermassError, RuntimeError):
    """The Steiner least-squares system is too ill-conditioned to trust"""

    def __init__(self, message: str, condition_number: float):
        self.condition_number = condition_number
        super().__init__(f"{message} (cond={condition_number:.3e})")


class ConfigError(QuermassError, ValueError):
    """Malformed environment setting or campaign configuration"""
