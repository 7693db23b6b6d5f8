"""Exception hierarchy shared by all cirlab modules."""


class CirlabError(Exception):
    """Base class for every error raised by cirlab."""


class DomainError(CirlabError, ValueError):
    """An argument lies outside the domain of the operation."""


class QuadratureError(CirlabError):
    """A quadrature did not reach its requested tolerance."""


class TailError(CirlabError):
    """A characteristic function is not integrable enough at the chosen cutoff."""


class MomentDivergenceError(CirlabError):
    """A quantile integral does not stabilise in the tails."""


class NoCutoffError(CirlabError):
    """The profile is identically zero (C_x = 0) so it has no inverse."""


class MonotonicityError(CirlabError):
    """A distance-to-equilibrium curve increased on a sampled time grid."""


class BracketError(CirlabError):
    """A root could not be bracketed."""


class BranchError(CirlabError):
    """A complex logarithm argument crossed the principal-branch cut."""


class SizeLimitError(CirlabError):
    """A discrete optimal transport instance exceeds the supported size."""


class DegenerateInputError(CirlabError):
    """A law without a density was passed to a density-based routine."""
