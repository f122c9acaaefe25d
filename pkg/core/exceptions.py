class AnisoException(Exception):
    """Base exception for symmetrization toolkit errors."""

    code = "error"


class GeometryException(AnisoException):
    """Base exception for convex-body errors."""

    code = "geometry"


class InvalidBodyError(GeometryException):
    """Exception raised when a body cannot be built from its vertices."""

    code = "invalid-body"


class DegenerateGaugeError(GeometryException):
    """Exception raised when the gauge is requested for a body without 0 in its interior."""

    code = "degenerate-gauge"


class DegeneratePolarError(GeometryException):
    """Exception raised when the polar is requested for a body without 0 in its interior."""

    code = "degenerate-polar"


class ZeroVolumeError(GeometryException):
    """Exception raised for flat bodies."""

    code = "zero-volume"


class YoungFunctionError(AnisoException):
    """Exception raised when a function violates the Young-function axioms."""

    code = "young-invalid"


class CatalogParseError(YoungFunctionError):
    """Exception raised for unreadable catalog strings."""

    code = "catalog-parse"


class LevelGridTooShortError(YoungFunctionError):
    """Exception raised when a concave level profile is still increasing at its last level."""

    code = "level-grid-too-short"

    def __init__(self, message: str, required_level: float = float("nan")):
        super().__init__(message)
        self.required_level = required_level


class GridError(AnisoException):
    """Base exception for grid-function errors."""

    code = "grid"


class ArgumentError(GridError):
    """Exception raised for inconsistent numerical arguments."""

    code = "argument"


class GradientRangeError(GridError):
    """Exception raised when a gradient leaves the box an integrand is sampled on."""

    code = "gradient-range"

    def __init__(self, message: str, magnitude: float = float("nan")):
        super().__init__(message)
        self.magnitude = magnitude


class NotInMdError(GridError):
    """Exception raised when a field does not decay to its essential infimum inside the box."""

    code = "not-in-md"


class PreconditionError(AnisoException):
    """Exception raised when a generator precondition fails."""

    code = "precondition"


class ConfigurationError(AnisoException):
    """Exception raised for configuration issues."""

    code = "config"


class ValidationError(AnisoException):
    """Exception raised for validation failures."""

    code = "validation"


class InputFileError(AnisoException):
    """Exception raised for missing or malformed input files."""

    code = "input-file"


class SymmetralBoxError(GridError):
    """Exception raised when a symmetral does not fit inside the grid box."""

    code = "symmetral-box"
