"""
Exception hierarchy for Sketch3D
"""

from typing import Optional


class S3DError(Exception):
    """Base class for all Sketch3D errors"""


class ConfigError(S3DError, ValueError):
    """Invalid configuration, shape mismatch or violated module invariant"""


class FormatError(S3DError, ValueError):
    """Malformed file content; offset is the byte position of the problem"""

    def __init__(self, message: str, offset: Optional[int] = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class StateError(S3DError, RuntimeError):
    """Operation not allowed in the current object state (e.g. frozen teacher)"""


class NumericalError(S3DError, ArithmeticError):
    """Non-finite value or failed numerical procedure"""

    def __init__(self, message: str, where: Optional[str] = None):
        self.where = where
        if where is not None:
            message = f"{message} [{where}]"
        super().__init__(message)


class UndefinedMetricError(S3DError, ValueError):
    """A metric has no evaluable class"""


__all__ = [
    "S3DError",
    "ConfigError",
    "FormatError",
    "StateError",
    "NumericalError",
    "UndefinedMetricError",
]
