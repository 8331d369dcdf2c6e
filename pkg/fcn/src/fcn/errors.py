"""Exception types for the fcn package."""


class FcnError(Exception):
    """Base class so callers can catch everything from this package."""


class ConfigError(FcnError, ValueError):
    """Bad specs, configs, or argument combinations."""


class ShapeError(FcnError, ValueError):
    """Input dims that the network cannot accept."""


class TrainingDivergedError(FcnError, RuntimeError):
    """Loss went non-finite during training."""
