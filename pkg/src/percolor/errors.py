"""Exception hierarchy shared by all percolor modules."""


class PercolorError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(PercolorError, ValueError):
    """Image or grid dimensions are empty or inconsistent."""


class ParameterError(PercolorError, ValueError):
    """A numeric parameter violates its documented constraints."""


class DomainError(PercolorError, ValueError):
    """Intensity values fall outside the admissible range."""


class DegenerateDomainError(PercolorError, ValueError):
    """The spatial domain is too small to carry a neighborhood kernel."""


class NormalizationError(PercolorError, ValueError):
    """Kernel weights cannot be normalized to unit mass."""


class FitError(PercolorError, ValueError):
    """Least-squares separation failed (rank deficiency or bad grid)."""


class NumericalFailureError(PercolorError, ArithmeticError):
    """A solver iterate produced non-finite values."""


class ImageFormatError(PercolorError, ValueError):
    """An image file is unreadable, truncated, or of an unsupported kind."""


class UnsupportedDepthError(ImageFormatError):
    """Image file declares a bit depth other than 8-bit (maxval 255)."""
