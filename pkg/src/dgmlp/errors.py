"""Exception types shared across the package."""


class DgmlpError(Exception):
    """Base class for every error this package raises on purpose."""


class ValidationError(DgmlpError, ValueError):
    """Malformed input data: bad edge list, ragged file, overlapping splits."""


class ParameterError(DgmlpError, ValueError):
    """A scalar parameter is outside its legal range."""


class DimensionError(DgmlpError, ValueError):
    """Array shapes do not line up."""


class ConfigurationError(DgmlpError, ValueError):
    """A run configuration is inconsistent or incomplete."""
