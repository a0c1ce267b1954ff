"""
Exception hierarchy shared by every pd-flow module.
The CLI catches PDFlowError and maps it to a nonzero exit code.
"""

from typing import Optional
import numpy as np


class PDFlowError(Exception):
    """Base class for all pd-flow errors"""


class DimensionError(PDFlowError, ValueError):
    """Array shapes disagree with the problem dimensions"""


class NonFiniteError(PDFlowError, ValueError):
    """A state, gradient or derivative contains NaN or inf"""


class DomainError(PDFlowError, ValueError):
    """A parameter or time argument lies outside its admissible range"""


class ConvexityError(PDFlowError, ValueError):
    """A quadratic objective is not symmetric positive semidefinite"""


class SaddlePointError(PDFlowError, ValueError):
    """A declared saddle point fails stationarity or feasibility, or none is known"""


class UnboundedProblemError(PDFlowError):
    """The objective is unbounded below on the feasible set (or the set is empty)"""


class ConvergenceError(PDFlowError):
    """An inner iterative solve did not reach its tolerance"""


class InsufficientDataError(PDFlowError, ValueError):
    """Too few samples or points for the requested fit or check"""


class ConfigError(PDFlowError, ValueError):
    """An experiment config or CLI argument is invalid"""


class IntegrationError(PDFlowError):
    """
    Integration stopped before t_end.
    Carries the last accepted time and state so callers can keep partial output.
    """
    
    def __init__(self, message: str, last_t: Optional[float] = None,
                 last_state: Optional[np.ndarray] = None):
        super().__init__(message)
        self.last_t = last_t
        self.last_state = last_state


class StepUnderflowError(IntegrationError):
    """Step size fell below h_min while the local error was still too large"""


def ensure_finite(values: np.ndarray, what: str) -> np.ndarray:
    """Raise NonFiniteError if any entry of values is NaN or inf"""
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"{what} contains non-finite values")
    return values
