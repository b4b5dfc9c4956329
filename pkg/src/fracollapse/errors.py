"""Exception hierarchy shared by all modules.

Each class carries the CLI exit code it maps to, so the command layer can
translate failures without a lookup table.
"""


class FracCollapseError(Exception):
    exit_code = 1


class InvalidFieldError(FracCollapseError, ValueError):
    """Non-finite samples or mismatched grids."""

    exit_code = 3


class DomainError(FracCollapseError, ValueError):
    exit_code = 3


class ConfigError(FracCollapseError, ValueError):
    exit_code = 2


class ConvergenceError(FracCollapseError, RuntimeError):
    """An iterative solver ran out of iterations.

    ``residual`` holds the last residual reached.
    """

    exit_code = 1

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class DegenerateSolutionError(ConvergenceError):
    pass


class PreconditionError(FracCollapseError, ValueError):
    exit_code = 3


class DependencyError(FracCollapseError, LookupError):
    """A required ground state (or other input) is missing or mismatched."""

    exit_code = 3


class DataError(FracCollapseError, ValueError):
    exit_code = 3


class GeometryError(FracCollapseError, ValueError):
    exit_code = 2


class RootBracketError(FracCollapseError, OverflowError):
    exit_code = 3


class FitError(FracCollapseError, ValueError):
    exit_code = 3


class IntegrityError(FracCollapseError, RuntimeError):
    """Numerical integrity failure, e.g. mass drift beyond tolerance."""

    exit_code = 4
