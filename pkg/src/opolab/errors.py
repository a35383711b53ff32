"""Exception types shared across the package."""


class OpolabError(Exception):
    """Base class for all package errors."""


class ThresholdError(OpolabError, ValueError):
    """Parameter set at or above the parametric oscillation threshold."""


class UnphysicalMeasurementError(OpolabError, ValueError):
    """A measured value cannot come from a physical source through the given chain."""


class CoverageError(OpolabError, ValueError):
    """Analyzer windows leave a frequency gap."""


class GridMismatchError(OpolabError, ValueError):
    """Two traces do not share the same frequency bins."""


class ScenarioError(OpolabError, ValueError):
    """Malformed scenario file; ``where`` names the offending field or line."""

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)
