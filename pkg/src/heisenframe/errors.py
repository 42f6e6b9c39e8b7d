"""Exception types shared across the engine."""


class EngineError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(EngineError):
    """Invalid user-supplied configuration (unknown preset, bad key, ...)."""


class ParameterError(EngineError):
    """Numeric parameter outside its documented range."""


class GridMismatchError(EngineError):
    """Two sampled windows live on incompatible grids and resampling is off."""


class UnsupportedDimensionError(EngineError):
    """Ambient dimension other than d=1 was requested."""


class InvalidFrequencyError(EngineError):
    """The plane frequency sigma must be nonzero."""


class InvalidDilationError(EngineError):
    """The dilation parameter y must be nonzero."""


class DimensionMismatchError(EngineError):
    """Hilbert-Schmidt entries with incompatible shapes or grids."""


class HypothesisError(EngineError):
    """A check was invoked with its hypotheses violated."""


class NormalizationError(HypothesisError):
    """A window that must be unit-norm is not."""


class UndefinedBoundsError(EngineError):
    """Frame bounds requested for a zero system."""


class DimensionCapError(ConfigError):
    """Total fiber dimension exceeds the desk-scale cap."""
