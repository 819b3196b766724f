"""Exception types shared across the package."""


class PolyglmError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(PolyglmError):
    """Array shapes do not agree with the declared problem dimensions."""


class RankDeficientEqualities(PolyglmError):
    """Equality rows are linearly dependent (duplicated or contradictory)."""


class Infeasible(PolyglmError):
    """The constraint region is empty, or no feasible point was found."""


class PivotFailure(PolyglmError):
    """No well-conditioned pivot block exists for equality elimination."""


class EmptyInterval(PolyglmError):
    """A truncation interval has lower >= upper."""


class EmptyConditionalInterval(PolyglmError):
    """A full-conditional interval collapsed; the chain state is inconsistent
    with the constraints."""


class NotPositiveDefinite(PolyglmError):
    """A covariance matrix admits no Cholesky factor."""


class EmptySlice(PolyglmError):
    """Slice level at or below the infimum of the cumulant function."""


class Singular(PolyglmError):
    """A design or normal-equations matrix is singular."""


class NoConvergence(PolyglmError):
    """Iterative optimisation failed to converge.

    Carries the last iterate and gradient norm for diagnostics.
    """

    def __init__(self, message, last_iterate=None, grad_norm=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.grad_norm = grad_norm


class TooFewDraws(PolyglmError):
    """Not enough retained draws to summarise."""


class ParseError(PolyglmError):
    """Malformed input file."""


class MissingColumn(PolyglmError):
    """A required column is absent from an input file."""


class OutOfRange(PolyglmError):
    """Input lies outside the supported domain."""
