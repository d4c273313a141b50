"""Shared exception types."""


class ResonantFrequencyError(ArithmeticError):
    """A frequency combination that must be nonzero vanished exactly."""


class NotDecomposableError(ValueError):
    """An index set admits no covering by resonances."""


class UnitarityDriftError(RuntimeError):
    """A propagator drifted away from the unitary group beyond tolerance."""


class ShellMatchError(RuntimeError):
    """No eigenvalue close enough to the requested spectral shell."""


class ScenarioError(ValueError):
    """A run configuration failed validation before any computation."""


class ToleranceExceededError(RuntimeError):
    """A computed quantity landed above the tolerance the run pinned for it."""
