"""
Error hierarchy for synthesis, certification and simulation.

Every error carries the process exit code the CLI maps it to, and an optional
label naming the violated equation or invariant (e.g. "lyapunov-decrement").
"""

from typing import Any, Dict, Optional


class ObserverError(Exception):
    """Base class for all library errors."""

    exit_code = 1

    def __init__(self, message: str, label: Optional[str] = None):
        super().__init__(message)
        self.label = label

    def to_record(self) -> Dict[str, Any]:
        """Machine-readable error record (written to stderr by the CLI)."""
        return {
            "error": type(self).__name__,
            "label": self.label,
            "message": str(self),
            "exit_code": self.exit_code,
        }


class InvalidInputError(ObserverError, ValueError):
    """Malformed matrices, inconsistent dimensions, unmet preconditions."""

    exit_code = 2


class NotInvariantError(InvalidInputError):
    """A subspace is not invariant under the matrix it is restricted to."""


class CertificateError(ObserverError):
    """A stability certificate or norm bound failed."""

    exit_code = 3

    def __init__(self, message: str, label: Optional[str] = None, value: Optional[float] = None):
        super().__init__(message, label)
        self.value = value

    def to_record(self) -> Dict[str, Any]:
        record = super().to_record()
        record["value"] = self.value
        return record


class ConsistencyError(CertificateError):
    """An algebraic identity that holds by construction was violated numerically."""


class NumericalError(ObserverError):
    """Numerical routine failed (placement residual, non-convergence, overflow)."""

    exit_code = 4


class NonTerminationError(NumericalError):
    """An iteration cap was exceeded where theory guarantees termination."""


class SimulationOverflowError(NumericalError):
    """The true plant state grew past the configured overflow limit."""
