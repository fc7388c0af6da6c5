"""Exception hierarchy shared across the package."""


class PredsynthError(Exception):
    """Base class for all errors raised by predsynth."""


class InvalidForecastError(PredsynthError, ValueError):
    """A probability vector is not on the simplex."""


class ShapeError(PredsynthError, ValueError):
    """Agent count or event count does not match between two objects."""


class InvalidCoefficientsError(PredsynthError, ValueError):
    """Pool coefficients produce a vertex probability outside [0, 1]."""


class NonSeparableError(PredsynthError, ValueError):
    """A conditional-probability tensor is not additively separable."""


class DegenerateMeanError(PredsynthError, ValueError):
    """A target mean lies on the simplex boundary where a prior cannot be built."""


class SpecificationError(PredsynthError, ValueError):
    """Inputs that are individually valid but mutually inconsistent."""


class CapabilityError(PredsynthError):
    """The requested method cannot handle this problem."""
