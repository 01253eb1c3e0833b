"""Typed errors shared across the exact and numeric layers."""


class LapspecError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(LapspecError):
    pass


class IrrationalEigenvalue(LapspecError):
    """A characteristic polynomial has a root outside Q.

    Signals an input outside the supported class (all eigenvalue /
    exponent data is restricted to rational numbers).
    """


class IrregularSingularity(LapspecError):
    """Lattice saturation did not terminate within its bound."""


class RamificationRequired(LapspecError):
    """A formal decomposition needs a ramified cover (slope not in {0,1})."""


class WindowTooSmall(LapspecError):
    """A truncated Laurent-window computation failed to stabilize."""


class TruncationInstability(LapspecError):
    """A truncated result changed when recomputed at higher order."""


class NonHermitian(LapspecError):
    pass


class NoSolutionFound(LapspecError):
    """The Birkhoff V-solution search exhausted its candidates."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ApparentSingularityResidue(LapspecError):
    """Saturation at a spurious finite point of a Laplace transform failed."""


class NonRegularAtInfinity(LapspecError):
    """The Brieskorn construction did not reach a finite-type lattice."""


class HypothesisViolation(LapspecError):
    """A caller-asserted hypothesis failed one of its checked necessary conditions."""


class SegmentThroughZero(LapspecError):
    """The pairing-transport segment [tau, 1/conj(tau)] passes through 0."""


class IllConditioned(LapspecError):
    """A loop factorization was rejected by its condition estimate."""


class NonInvertibleSample(LapspecError):
    """A loop matrix is numerically singular at a circle sample."""


class ParseError(LapspecError):
    """A job or payload file violates the input schema."""
