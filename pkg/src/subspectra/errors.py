"""Exception types raised by subspectra."""


class SubspectraError(Exception):
    """Base class for library-specific failures."""


class StencilError(SubspectraError):
    """A vector-field coefficient depends on the coordinate it differentiates."""


class SingularityError(SubspectraError, ValueError):
    """A spectral function is singular (or non-finite) on the spectrum."""


class DecompositionError(SubspectraError, ValueError):
    """Fourier block decomposition requested for a non-invariant operator."""


class FitError(SubspectraError, ValueError):
    """Asymptotic fit window is too small or out of range."""


class ConfigError(SubspectraError, ValueError):
    """Experiment configuration is malformed."""
