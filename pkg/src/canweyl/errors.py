"""Exception types raised by the numerical routines.

All library-specific failures derive from :class:`CanweylError` so callers
can distinguish them from programming errors.
"""


class CanweylError(Exception):
    """Base class for all library errors."""


class RankDeficientPair(CanweylError):
    """A (C, D) pair with rank [C D] < p was supplied where a proper pair is required."""


class PoleAt(CanweylError):
    """Evaluation point collides with a pole (atom) of a Herglotz representation."""


class ConjugateCollision(CanweylError):
    """Two distinct kernel nodes satisfy z = conj(zeta), where the kernel is singular."""


class NonMonotone(CanweylError):
    """A recovered distribution function has an increment with a negative eigenvalue."""


class NoConvergence(CanweylError):
    """The extrapolation residual of a limit process failed to shrink."""


class SingularDenominator(CanweylError):
    """The denominator of a linear-fractional transform is numerically singular."""

    def __init__(self, message, cond=None):
        super().__init__(message)
        self.cond = cond


class InvalidCoefficients(CanweylError):
    """A coefficient profile violates symmetry, positivity or trace normalization."""

    def __init__(self, message, offenders=None):
        super().__init__(message)
        self.offenders = offenders or []


class OutOfInterval(CanweylError):
    """A time argument lies outside the interval on which the system is defined."""


class NotRegular(CanweylError):
    """Operation requires a regular right endpoint but the system is a half-line system."""


class UnsupportedDimension(CanweylError):
    """Operation is only implemented for block size p = 1."""


class SpectralPoint(CanweylError):
    """The spectral parameter hits an eigenvalue of the relevant selfadjoint extension."""

    def __init__(self, message, cond=None):
        super().__init__(message)
        self.cond = cond


class NotInHalfPlane(CanweylError):
    """Limit-point evaluation requested at a real spectral parameter."""


class NoShrinkage(CanweylError):
    """The nested Weyl disks stalled above the requested radius at maximal truncation."""

    def __init__(self, message, radius=None):
        super().__init__(message)
        self.radius = radius


class QuadratureUnderResolved(CanweylError):
    """The quadrature mesh is too coarse for the requested oscillation frequency."""
