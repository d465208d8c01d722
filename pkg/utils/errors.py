"""
Exception hierarchy for the vMF toolkit and the CLI exit codes they map to

Exit codes: 0 ok, 2 bad input (parse, domain or precondition), 3 non-convergence,
4 degenerate data, 5 configuration, 1 anything else. A DomainError reaching the
CLI always stems from a user-supplied value, so it reports as bad input.
"""

from typing import Optional


class VmfError(Exception):
    """Base class for every error raised by the toolkit"""

    exit_code = 1


class DomainError(VmfError, ValueError):
    """Argument outside the mathematical domain of an operation"""

    exit_code = 2


class DimensionMismatchError(DomainError):
    """Vectors or models of different ambient dimension were combined"""


class PreconditionError(VmfError):
    """Input violates a documented precondition (e.g. too few points per fold)"""

    exit_code = 2


class ParseError(VmfError):
    """Input file could not be parsed"""

    exit_code = 2


class DegenerateDataError(VmfError):
    """Data carry no usable direction information (all points coincide)"""

    exit_code = 4


class NonConvergenceError(VmfError):
    """Fixed-point iteration stopped without meeting its tolerance"""

    exit_code = 3

    def __init__(self, message: str, result: Optional[object] = None):
        super().__init__(message)
        self.result = result


class QuadratureError(VmfError):
    """Adaptive quadrature failed to reach the requested tolerance"""


class SingularMatrixError(VmfError):
    """Matrix too ill-conditioned to invert"""

    def __init__(self, message: str, condition_number: float = float("inf")):
        super().__init__(message)
        self.condition_number = condition_number


class ConfigError(VmfError):
    """Simulation spec or settings are malformed; the message names the key"""

    exit_code = 5

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


def exit_code_for(exc: BaseException) -> int:
    """
    Map an exception to the CLI exit status

    Args:
        exc: Raised exception

    Returns:
        0 is never returned; toolkit errors carry their own code, anything else is 1
    """
    if isinstance(exc, VmfError):
        return exc.exit_code
    return 1
