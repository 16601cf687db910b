"""Exceptions raised by the AJIVE library."""


class AjiveError(ValueError):
    """Base class for all errors raised by ajive_cli."""


class DimensionMismatchError(AjiveError):
    """Blocks disagree on the number of objects, or labels disagree with shapes."""


class ParseError(AjiveError):
    """A matrix file contains a non-numeric, missing or non-finite cell."""


class TooFewBlocksError(AjiveError):
    """Fewer than two data blocks were supplied."""


class RankSpecError(AjiveError):
    """A rank or threshold specification is invalid for the block."""


class SvdConvergenceError(AjiveError):
    """The SVD did not converge with any available LAPACK driver."""


class AmbientDimensionError(AjiveError):
    """Subspaces live in different spaces, or there is no room for an orthogonal draw."""


class DistributionKindError(AjiveError):
    """A bound distribution of the wrong kind was passed to a combiner."""


class ParameterMismatchError(AjiveError):
    """Bound distributions were simulated for different shapes than the estimates."""


class EmptySignalError(AjiveError):
    """A rank-0 signal estimate reached a step that needs at least one component."""


class OracleCaseError(AjiveError):
    """The requested rank case does not match the true and estimated ranks."""
