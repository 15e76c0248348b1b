"""Exception hierarchy shared by all grassdict modules."""


class GrassdictError(ValueError):
    """Base class for every error raised by the library."""


class DecompositionError(GrassdictError):
    """A matrix factorization failed to converge."""


class RankDeficiencyError(GrassdictError):
    """A matrix does not have the rank an operation requires."""


class EmptySpanError(GrassdictError):
    """The column span of the input is the zero subspace."""


class ShapeMismatchError(GrassdictError):
    """Operands have incompatible shapes or ambient dimensions."""


class ContractError(GrassdictError):
    """An input violates a documented precondition."""


class GuardError(GrassdictError):
    """A computation was refused because it would be too expensive."""
