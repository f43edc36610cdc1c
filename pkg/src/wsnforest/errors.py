"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A configuration value is missing, malformed, or out of range."""


class DataFormatError(ValueError):
    """An input data file is malformed.

    ``line`` carries the 1-based line number of the offending row when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ArtifactError(ValueError):
    """A persisted artifact (e.g. a forest file) is missing, malformed, or has
    an unsupported version."""


class UndefinedImpurityError(ValueError):
    """Impurity requested for an empty population."""


class PartitionMismatchError(ValueError):
    """Child count tuples do not sum componentwise to their parent."""
