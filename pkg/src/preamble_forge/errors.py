"""Exception types raised across the package."""
from __future__ import annotations

import numpy as np


class PreambleForgeError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(PreambleForgeError, ValueError):
    """An argument violates a documented precondition."""


class InfeasibleError(PreambleForgeError):
    """No strictly feasible point exists for a design problem.

    ``certificate`` carries the value that proves infeasibility, e.g. the
    smallest OOB power reachable at the positivity floor, or the smallest
    NEF reachable within the power budget.
    """

    def __init__(self, message: str, certificate: float):
        super().__init__(message)
        self.certificate = float(certificate)


class ConvergenceError(PreambleForgeError):
    """The barrier method hit its iteration cap; ``last_iterate`` is kept."""

    def __init__(self, message: str, last_iterate: np.ndarray, iterations: int):
        super().__init__(message)
        self.last_iterate = np.asarray(last_iterate)
        self.iterations = iterations


class RankDeficientError(PreambleForgeError, np.linalg.LinAlgError):
    pass


class SingularMatrixError(PreambleForgeError, np.linalg.LinAlgError):
    pass


class ModelMismatchWarning(UserWarning):
    """The CP is too short for the channel, so circular convolution is not exact."""
