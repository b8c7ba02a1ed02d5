"""Exception taxonomy shared across the library.

Every error a caller might want to branch on gets its own class; plain
``ValueError`` is reserved for malformed arguments (wrong shapes, bad
parameter values).
"""


class RayReduceError(Exception):
    """Base class for all library-specific failures."""


class IntegrationError(RayReduceError):
    """Integration produced a non-finite state.

    ``last_valid_time`` holds the last time at which the state was finite.
    """

    def __init__(self, message, last_valid_time):
        super().__init__(message)
        self.last_valid_time = last_valid_time


class ProjectionError(RayReduceError):
    """Newton projection onto a constraint set failed to converge."""


class RaySignError(RayReduceError):
    """A state's momentum sits on the wrong side of the ray (t <= 0)."""


class GaugeError(RayReduceError):
    """Gauge fixing hit an orbifold point (degenerate slice radius).

    ``time`` is set when the failure occurred along a trajectory.
    """

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class SolverError(RayReduceError):
    """Nonlinear solver diverged; ``residual`` holds the final norm."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SamplingError(RayReduceError):
    """Level-set sampler rejected nearly every candidate."""


class InfeasibleLevelSetError(RayReduceError):
    """The requested momentum ray does not intersect the momentum image."""
