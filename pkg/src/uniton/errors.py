"""Shared exception types."""


class UnitonError(Exception):
    """Base class for errors raised by this package."""


class DimMismatch(UnitonError):
    """Operands live in different ambient dimensions."""


class OddDim(UnitonError):
    """An even ambient dimension is required (symplectic structures)."""


class RankMismatch(UnitonError):
    """Subspaces of equal rank are required."""


class ZeroSection(UnitonError):
    """The zero section has no order."""


class PoleAtPoint(UnitonError):
    """A rational function was evaluated at a root of its denominator."""

    def __init__(self, z):
        super().__init__(f"pole at z = {z}")
        self.z = z


class NotUnitary(UnitonError):
    """A loop failed its unitarity validation."""


class SingularAtMinusOne(UnitonError):
    """A loop is singular at lambda = -1."""


class SingularAtMu(UnitonError):
    """A loop is singular at the requested circle parameter."""


class ZeroLambdaWithNegativePowers(UnitonError):
    """A Laurent loop with negative powers cannot be evaluated at lambda = 0."""


class SingularPoint(UnitonError):
    """A sample point is excluded (pole or ambiguous rank)."""

    def __init__(self, z, reason=""):
        super().__init__(f"singular sample point z = {z}" + (f" ({reason})" if reason else ""))
        self.z = z
        self.reason = reason


class SingularNeighborhood(SingularPoint):
    """A finite-difference stencil around the point hits a singular point."""


class DegreeZero(UnitonError):
    """A degree-reducing step was requested on a degree-zero model."""


class NotFull(UnitonError):
    """An osculating chain terminated before filling the ambient space."""


class NotReal(UnitonError):
    """A model failed its reality certificate."""


class NotSymplectic(UnitonError):
    """A model failed its symplectic certificate."""


class OddDegreeOddDim(UnitonError):
    """Odd-degree real factorization needs an even ambient dimension."""


class IsotropyViolated(UnitonError):
    """Exact isotropy required by a construction does not hold."""


class HorizontalityViolated(UnitonError):
    """A sequence is not closed under d/dz in the required sense."""


class RankDeficientEverywhere(UnitonError):
    """Loop columns never span the fibre."""


class ParseError(UnitonError):
    """A manifest could not be parsed."""


class InvariantViolation(UnitonError):
    """A manifest parsed but violates a structural invariant."""
