"""Exception types raised across the package."""


class RegimeScoutError(Exception):
    """Base class for all package errors."""


class NonFinite(RegimeScoutError):
    """Integration diverged (state magnitude above the blow-up guard or NaN)."""

    def __init__(self, message, step=None, index=None):
        super().__init__(message)
        self.step = step
        self.index = index


class TooShort(RegimeScoutError):
    pass


class DimensionMismatch(RegimeScoutError):
    pass


class NegativeDiscriminant(RegimeScoutError):
    pass


class NotPositiveDefinite(RegimeScoutError):
    pass


class EmptyPool(RegimeScoutError):
    pass


class ConfigInvalid(RegimeScoutError):
    """Invalid configuration; ``path`` names the offending key, e.g. ``system.free_axes[0]``."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class DegenerateClustering(RegimeScoutError):
    pass
