"""Exception and warning types shared across the package."""


class CapacityError(ValueError):
    """Requested more modes than the discretization can supply."""


class IterationLimitError(RuntimeError):
    """An iterative eigensolver failed to converge; partial results are refused."""


class OutsideDomainError(ValueError):
    """A point lies outside the domain or inside the boundary accuracy margin."""


class TruncationWarning(UserWarning):
    """A spectral expansion was truncated before its coefficient tail was negligible."""
