"""Exception types shared across the package.

Exit-code mapping used by the command line driver:
ConfigurationError -> 2, NumericalError -> 3, check failures -> 1.
"""


class ConfigurationError(ValueError):
    """Invalid user input: bad config value, malformed table, unsupported mode."""


class TableFormatError(ConfigurationError):
    """Malformed tabulated-potential file; message carries offending line numbers."""


class UnsupportedPotentialError(ConfigurationError):
    """Operation needs a symbolically closed (quadratic) potential."""


class NumericalError(RuntimeError):
    """A numerical routine failed its own quality gate (divergence, bad fit, ...)."""


class BoxTooSmallError(NumericalError):
    """Quadrature/discretization box truncates non-negligible Gibbs mass."""


class FitError(NumericalError):
    """Decay-rate fit rejected: too few points or nonpositive values in window."""
