"""Exception types shared across the package."""


class MpJacobiError(Exception):
    """Base class for library errors."""


class DimensionError(MpJacobiError, ValueError):
    """Operands have incompatible or unsupported shapes."""


class ZeroColumnError(MpJacobiError, ValueError):
    """The input matrix has an all-zero column."""


class RankDeficientError(MpJacobiError, ArithmeticError):
    """A condition number was requested for a numerically rank-deficient matrix."""


class NonConvergenceError(MpJacobiError, RuntimeError):
    """An iteration that must converge (e.g. the extended-precision
    reference SVD) exhausted its sweep budget."""
