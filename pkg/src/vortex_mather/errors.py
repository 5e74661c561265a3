"""Exception hierarchy shared by every vortex_mather module."""


class VortexMatherError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(VortexMatherError):
    """Run configuration is missing or does not validate."""


class DomainError(VortexMatherError, ValueError):
    """A point lies outside the disk of validity or below r*."""


class SingularityError(VortexMatherError):
    """A point sits on (or numerically at) the vortex."""


class DomainExit(VortexMatherError):
    """A trajectory or an iterate left the region where it must stay.

    `t` is the time of exit for flow integrations; `index` is the iterate
    number for rotation-number runs.
    """

    def __init__(self, message: str, t: float | None = None, index: int | None = None):
        super().__init__(message)
        self.t = t
        self.index = index


class StepFailure(VortexMatherError):
    """The adaptive integrator could not complete a step."""


class BracketError(VortexMatherError):
    """Root bracket endpoints do not straddle the target."""


class NoConvergence(VortexMatherError):
    """An iterative solve hit its iteration cap.

    The best iterate found so far is attached as `best`.
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class WindowError(VortexMatherError):
    """Requested rotation number lies outside the admissible window."""


class DepthError(VortexMatherError):
    """Convergent denominators exceed the configured cap."""


class HypothesisError(VortexMatherError):
    """An oscillatory integral violates the zero circular mean hypothesis."""


class QuadratureError(VortexMatherError):
    """Panel quadrature did not settle under refinement."""


class MonotonicityViolation(VortexMatherError):
    """Hull function samples are not monotone."""

    def __init__(self, message: str, violations: int = 0):
        super().__init__(message)
        self.violations = violations


class ClampWarning(UserWarning):
    """A solver iterate left the generating-function domain and was pulled back."""
