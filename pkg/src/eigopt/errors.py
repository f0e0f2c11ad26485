"""Exception types shared across the package."""


class EigoptError(Exception):
    """Base class for all package errors."""


class InvalidDimensions(EigoptError):
    """Mesh construction parameters are unusable."""


class FieldSizeMismatch(EigoptError):
    """A per-element field does not match the mesh it is used with."""


class SingularMatrix(EigoptError):
    """2x2 inverse requested for a (numerically) singular matrix."""


class NotPSD(EigoptError):
    """Matrix square root requested for a non-PSD matrix."""


class NoConvergence(EigoptError):
    """An iterative solver hit its iteration cap before its tolerance."""


class OutOfRange(EigoptError):
    """A density or parameter value lies outside its admissible range."""


class DegenerateDenominator(EigoptError):
    """Rank-one laminate denominator collapsed; inputs not uniformly elliptic."""


class SingularInner(EigoptError):
    """Laminate inner matrix fell below its determinant lower bound."""


class InvalidBounds(EigoptError):
    """Ellipticity bounds do not satisfy the required normal form."""


class SingularQ(EigoptError):
    """Internal closed-form matrix unexpectedly singular (classification bug)."""


class NoProgress(EigoptError):
    """Ascent backtracking exhausted without any accepted step."""


class ConfigError(EigoptError):
    """Run configuration failed validation."""
