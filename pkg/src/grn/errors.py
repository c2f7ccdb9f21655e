"""Exception types shared across the package.

ConfigError maps to CLI exit code 1 (usage / configuration problems),
everything else that escapes maps to exit code 2 (runtime failures).
"""


class GrnError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(GrnError):
    """Invalid configuration, CLI usage, or incompatible settings."""


class DataError(GrnError):
    """Malformed manifests, images, masks, or split files."""


class TrainingDivergedError(GrnError):
    """A loss became NaN or infinite during training."""

    def __init__(self, message, epoch=None, iteration=None, losses=None):
        super().__init__(message)
        self.epoch = epoch
        self.iteration = iteration
        self.losses = losses or {}
