"""Exception types raised across the package."""


class RISError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(RISError, ValueError):
    pass


class NotHermitian(RISError, ValueError):
    pass


class EigenSolverError(RISError, ArithmeticError):
    """The general eigensolver failed to converge or reconstruct its input."""


class NonFaithfulState(RISError, ValueError):
    """A logarithm was requested of a state whose smallest eigenvalue is too small."""

    def __init__(self, message: str, min_eigenvalue: float | None = None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class NonTraceless(RISError, ValueError):
    def __init__(self, message: str, trace: complex | None = None):
        super().__init__(message)
        self.trace = trace


class CPTPViolation(RISError):
    pass


class NonDiagonalizable(RISError):
    """A peripheral eigenvalue cluster is not semisimple."""


class NearDegeneratePeripheral(RISError):
    """The next-largest eigenvalue modulus is too close to the unit circle."""


class ReducibleChannel(RISError):
    pass


class NoSuchM(RISError):
    pass


class StepTooLarge(RISError):
    """Consecutive spectral projectors differ too much for the Kato step."""


class ConfigError(RISError, ValueError):
    pass
