"""Exception hierarchy shared by the library and the CLI."""


class SupergainError(Exception):
    """Base class for all library errors."""


class DomainError(SupergainError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class NumericalError(SupergainError, ArithmeticError):
    """A numerical procedure failed to converge or to bracket a root."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class IllConditioned(NumericalError):
    """The lossy coupling spectrum drops below the working-precision floor.

    ``smallest`` carries the offending value of ``lambda_min + rho``.
    """

    def __init__(self, message, smallest, floor):
        super().__init__(message, smallest=smallest, floor=floor)
        self.smallest = smallest
        self.floor = floor


class DivergentGap(DomainError):
    """The bound gap diverges for lossless antennas."""
