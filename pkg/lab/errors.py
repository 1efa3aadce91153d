"""
Exception hierarchy shared by models, services and the command line
"""
from typing import Optional


class LabError(Exception):
    """Base class for every error raised by Attractor Lab"""

    exit_code = 1


class ConfigError(LabError, ValueError):
    """Run configuration could not be read or parsed"""


class ValidationError(LabError, ValueError):
    """A parameter or input violates a documented precondition"""


class RangeError(ValidationError):
    """Evaluation requested outside the covered domain"""


class NumericalError(LabError, ArithmeticError):
    """Non-finite values appeared during a computation"""

    exit_code = 3

    def __init__(self, message: str, time: Optional[float] = None, index: Optional[int] = None):
        super().__init__(message)
        self.time = time
        self.index = index


class BlowupError(NumericalError):
    """State norm exceeded the blowup threshold"""
