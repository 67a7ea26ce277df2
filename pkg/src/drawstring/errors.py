"""Exception types shared across the package."""


class DrawstringError(Exception):
    """Base class for all package-specific errors."""


class DomainError(DrawstringError):
    """Evaluation outside a function's domain (never extrapolated)."""


class MalformedProfileError(DrawstringError):
    """A profile violates its structural invariants (f <= 0, gaps, ...)."""


class QuadratureError(DrawstringError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class FdOracleUnresolvedError(DrawstringError):
    """The FD curvature oracle could not certify convergence at any
    admissible step near the requested point."""


class SmoothingError(DrawstringError):
    """A smoothing-step hypothesis failed or a construction broke down."""


class ShootingError(DrawstringError):
    """Boundary-matching shoot failed to close within its budget."""


class GridError(DrawstringError):
    """Distance-grid construction or query problem."""


class EnumerationBudgetError(DrawstringError):
    """Word enumeration would exceed the configured budget."""
