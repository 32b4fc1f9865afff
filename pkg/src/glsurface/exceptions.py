"""Exception hierarchy.

Operational problems (bad input, solver breakdown) and scientific
violations (a proven identity failing beyond tolerance) are kept apart so
that the command line can map them to different exit codes.
"""


class GLSurfaceError(Exception):
    """Base class for all package errors."""


class GridError(GLSurfaceError, ValueError):
    """A grid is too small or too coarse for the requested computation."""


class ConvergenceError(GLSurfaceError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance.

    ``diagnostics`` carries whatever the solver knew when it gave up
    (last iterate, residual, iteration count).
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class Violation(GLSurfaceError):
    """A mathematical statement checked numerically did not hold.

    ``record`` is a flat dict that the CLI serializes as the structured
    violation report.
    """

    def __init__(self, message, **record):
        super().__init__(message)
        self.record = {"message": message, **record}
