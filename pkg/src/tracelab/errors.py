"""Exception types shared across the package."""


class TracelabError(Exception):
    """Base class for all package-specific errors."""


# -- linear-algebra layer -------------------------------------------------

class NotSymmetric(TracelabError):
    """A matrix required to be symmetric is not (beyond tolerance)."""


class NotPositiveDefinite(TracelabError):
    """A Gram matrix has a non-positive eigenvalue (Cholesky failed)."""


class DimensionMismatch(TracelabError):
    """Shapes or space dimensions are inconsistent."""


class NotSelfAdjoint(TracelabError):
    """An operator required to be self-adjoint in its space is not."""


class NegativeEigenvalue(TracelabError):
    """A fractional power was requested of an operator with negative spectrum."""


class RangeNotContained(TracelabError):
    """Range inclusion required by a factorization does not hold numerically."""


# -- mesh / assembly layer -------------------------------------------------

class BadParameter(TracelabError):
    """Invalid mesh kind or refinement parameter."""


class DegenerateElement(TracelabError):
    """An element with non-positive measure was produced."""


class GramNotPD(TracelabError):
    """An assembled Gram matrix failed the positive-definiteness check."""


# -- solver / suite layer ---------------------------------------------------

class SolveFailure(TracelabError):
    """A direct linear solve could not be completed."""


class NotHarmonic(TracelabError):
    """Input vector fails the interior-residual gate for boundary-flux extraction."""


class OrderOutOfRange(TracelabError):
    """Smoothness order outside the supported interval."""


class ZeroVector(TracelabError):
    """An operation requiring a nonzero vector received (numerically) zero."""


# -- cli layer ---------------------------------------------------------------

class ConfigParseError(TracelabError):
    """Run configuration file or flags could not be parsed or validated."""
