"""Exception types shared across the package."""


class SoftmhError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(SoftmhError):
    """Vector or matrix shapes are inconsistent with the instance."""


class ZeroColumn(SoftmhError):
    """A design-matrix column has zero norm and cannot be normalized."""

    def __init__(self, column: int):
        super().__init__(f"design column {column} has zero norm")
        self.column = column


class StateSpaceTooLarge(SoftmhError):
    """2^p exceeds the cap for exhaustive state enumeration."""


class EnumerationTooLarge(SoftmhError):
    """A restricted subset enumeration exceeds its configured cap."""


class AlreadyActive(SoftmhError):
    """Column insertion requested for an index already in the active set."""

    def __init__(self, column: int):
        super().__init__(f"column {column} is already active")
        self.column = column


class NotActive(SoftmhError):
    """Column removal requested for an index not in the active set."""

    def __init__(self, column: int):
        super().__init__(f"column {column} is not active")
        self.column = column


class NotDisjoint(SoftmhError):
    """Two index sets that must be disjoint overlap."""


class RootHasNoParent(SoftmhError):
    """The tree root (the true support) has no parent state."""


class CycleDetected(SoftmhError):
    """Parent map contains a cycle; surfaced, never silently repaired."""


class NoConvergence(SoftmhError):
    """Iterative solver hit its iteration cap; best iterate attached."""

    def __init__(self, max_iter: int, best, residual: float):
        super().__init__(
            f"no convergence after {max_iter} sweeps (residual {residual:.3e})"
        )
        self.max_iter = max_iter
        self.best = best
        self.residual = residual


class ConfigInvalid(SoftmhError):
    """An experiment configuration failed validation."""
