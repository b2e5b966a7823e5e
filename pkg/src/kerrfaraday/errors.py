"""Exception types shared across the package.

Each carries the CLI exit code it maps to, so the command layer can
translate failures without a lookup table.
"""


class KerrFaradayError(Exception):
    exit_code = 1


class DomainError(KerrFaradayError, ValueError):
    """A precondition on parameters, points or conserved quantities failed."""

    exit_code = 2


class BasisUndefinedError(DomainError):
    """The measurement basis degenerates (photon along the principal null direction)."""

    def __init__(self, message, s=None):
        super().__init__(message)
        self.s = s


class VerificationError(KerrFaradayError):
    exit_code = 3


class StalledOrbitError(KerrFaradayError, RuntimeError):
    """Step-size underflow, typically near a double root of R or Theta."""

    exit_code = 4

    def __init__(self, message, s=None):
        super().__init__(message)
        self.s = s
