"""Exception and warning types shared across the package."""


class Tls2pError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(Tls2pError):
    """A scenario configuration is malformed or inconsistent.

    The message always names the offending field.
    """


class GridTooShort(Tls2pError):
    """A sampling grid does not cover the pulse support plus the re-emission tail."""


class NoConvergence(Tls2pError):
    """An adaptive quadrature exhausted its subdivision budget."""


class ScaleMismatch(Tls2pError):
    """A density scale was requested that does not apply to the field."""


class BoundaryLeak(UserWarning):
    """A field handed to a Fourier transform has not decayed at the grid edge."""
