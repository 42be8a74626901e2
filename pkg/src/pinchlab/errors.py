"""Exception hierarchy shared across the package."""


class PinchLabError(Exception):
    """Base class for every error raised by pinchlab."""


class ConfigError(PinchLabError, ValueError):
    """A model/subset document or run configuration is malformed."""


class PinchingViolationError(PinchLabError, ValueError):
    """The curvature profile leaves the band [a^2, b^2]."""


class IntegrationError(PinchLabError, RuntimeError):
    """An ODE integration failed (step size underflow, non-finite state)."""


class OutOfHorizonError(PinchLabError, ValueError):
    """A radius outside [0, r_max] was requested from a warped model."""


class NonconvexBoundaryError(PinchLabError, ValueError):
    """A boundary curve or shape bound is not convex w.r.t. the outward normal."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class CaseInapplicableError(PinchLabError, ValueError):
    """A requested branch of a case-split estimate does not apply."""


class OutOfChartError(PinchLabError, ValueError):
    """Two points are too far apart along Y to share a chart."""


class NoBracketError(PinchLabError, RuntimeError):
    """Shooting could not bracket the target."""


class ClampedSegmentError(PinchLabError, RuntimeError):
    """The connecting geodesic would have to leave the modelled region."""


class TrappedGeodesicError(PinchLabError, RuntimeError):
    """A geodesic failed to reach the requested height."""


class InfeasibleError(PinchLabError, RuntimeError):
    """No parameters satisfy the requested set of conditions."""


class FootPointError(PinchLabError, RuntimeError):
    """Projection of a point onto a boundary curve did not converge."""
