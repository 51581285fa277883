"""Exception types shared across the package."""


class HeadforgeError(Exception):
    """Base class for all package errors."""


class FormatError(HeadforgeError):
    """File is not a well-formed NIfTI-1 volume."""


class DatatypeError(HeadforgeError):
    """Stored values are incompatible with the requested volume type."""


class TaxonomyError(HeadforgeError):
    """Label value or rule not covered by the active taxonomy."""


class GeometryError(HeadforgeError):
    """Volume geometries do not match where they must."""


class ParameterError(HeadforgeError):
    """Operation parameter outside its valid range."""


class ConfigError(HeadforgeError):
    """Pipeline configuration fails schema or range validation."""


class DegenerateDataError(HeadforgeError):
    """Statistical input carries no usable information."""
