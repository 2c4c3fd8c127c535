"""Exception types shared across the package."""


class AtomolError(Exception):
    """Base class for package-specific failures."""


class InvalidParameterError(AtomolError, ValueError):
    """An argument violates a documented precondition."""


class StateNotFoundError(AtomolError, LookupError):
    """A number state does not belong to the basis it was looked up in."""


class CapacityError(AtomolError, RuntimeError):
    """Problem size exceeds what the requested solver path can handle."""


class ConvergenceError(AtomolError, RuntimeError):
    """An iterative solver stopped before reaching its target residual."""

    def __init__(self, message: str, best_residual: float | None = None):
        super().__init__(message)
        self.best_residual = best_residual


class SingularCoordinatesError(AtomolError, ValueError):
    """Canonical coordinates undefined at this state (vanishing modulus)."""


class IntegrationError(AtomolError, RuntimeError):
    """Trajectory integration failed (norm drift or step budget exhausted)."""


class StepSizeError(IntegrationError):
    """A single accepted step rotated a tracked phase by pi/2 or more."""


class BracketError(AtomolError, ValueError):
    """A bracketed minimum search hit the bracket edge or a non-unimodal scan."""


class InvalidDataError(AtomolError, ValueError):
    """A data set is unusable for the requested fit."""
