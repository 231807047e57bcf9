"""Exception taxonomy shared by all modules."""


class PrandtlLabError(Exception):
    """Base class for all package errors."""


class ParameterError(PrandtlLabError, ValueError):
    """Invalid argument (sizes, signs, ranges)."""


class ExtrapolationError(PrandtlLabError, ValueError):
    """Interpolation targets outside the source domain."""


class DomainTruncationError(PrandtlLabError):
    """Field is not negligible at the truncated right boundary."""


class QuadratureError(PrandtlLabError):
    """Adaptive quadrature or series summation failed to converge."""


class InstabilityError(PrandtlLabError):
    """Time step produced NaN/Inf and retries were exhausted."""


class FitError(PrandtlLabError):
    """Not enough data (decades of growth) for a rate fit."""


class DecompositionError(PrandtlLabError):
    """Newton solve for the modulation parameters diverged."""


class FrameError(PrandtlLabError):
    """Renormalized frame would leave the computational domain."""


class GlueSpecError(PrandtlLabError, ValueError):
    """Adjacent glue segments disagree at a junction."""


class SingularPointError(PrandtlLabError, ValueError):
    """Evaluation at a singular point of a weight (Z = 0)."""
