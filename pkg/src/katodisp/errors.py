"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, so each class carries the code it
should produce.
"""


class KatoDispError(Exception):
    exit_code = 1


class InvalidInputError(KatoDispError, ValueError):
    """Malformed arguments: empty grids, non-finite samples, bad parameters."""

    exit_code = 2


class ConfigError(InvalidInputError):
    exit_code = 2


class ResolutionError(KatoDispError):
    """A discretization is too coarse for the requested quantity."""

    exit_code = 3


class DivergenceError(KatoDispError):
    """A Neumann series failed to converge within the term budget."""

    exit_code = 3


class WindowError(ResolutionError):
    """No time samples survive the box-validity filter."""


class SpectralObstructionError(KatoDispError):
    """``I + T(lambda)`` is (numerically) singular at some spectral parameter."""

    exit_code = 4

    def __init__(self, message: str, lam: float | None = None):
        super().__init__(message)
        self.lam = lam


class SingularPointError(InvalidInputError):
    """A point kernel was requested on its diagonal ``x = y``."""
