"""Exception hierarchy.

The CLI maps the three families below to distinct exit codes:
:class:`ConfigError` (2), :class:`ParseError` (3), :class:`ScaleError` (4).
"""


class GraphKMeansError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(GraphKMeansError, ValueError):
    """Invalid arguments or configuration."""


class DimensionError(ConfigError):
    """Attribute dimensions or array shapes do not agree."""


class InvalidPaddingError(ConfigError):
    """Requested padded order is smaller than the graph order."""


class InvalidPermutationError(ConfigError):
    """A vertex mapping is not a bijection."""


class EmptySampleError(ConfigError):
    pass


class LabelsRequiredError(ConfigError):
    pass


class SilhouetteUndefinedError(ConfigError):
    """Silhouette needs at least two non-empty clusters."""


class ScaleError(GraphKMeansError):
    """Instance too large for an exhaustive method."""


class AnnealingDiverged(GraphKMeansError, ArithmeticError):
    """Graduated assignment produced non-finite values; retry with a smaller ``beta0``."""


class ParseError(GraphKMeansError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(ParseError):
    """A record disagrees with the dataset header."""


class EmptyDatasetError(ParseError):
    pass
