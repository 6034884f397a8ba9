"""Exception hierarchy shared by all modules."""


class DRBoundsError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgument(DRBoundsError, ValueError):
    pass


class ConstructionInvalid(DRBoundsError):
    """A nuisance function left its admissible range."""


class BudgetInfeasible(DRBoundsError):
    def __init__(self, component: str, message: str):
        super().__init__(f"{component}: {message}")
        self.component = component


class DegeneratePropensity(DRBoundsError):
    pass


class OverlapViolation(DRBoundsError):
    pass


class NoTreated(DRBoundsError):
    pass


class NonConvergence(DRBoundsError):
    pass


class CaseMismatch(DRBoundsError, ValueError):
    pass


class NTooSmall(DRBoundsError):
    """A smallness condition required for a construction is violated."""

    def __init__(self, inequality: str, lhs: float, rhs: float):
        super().__init__(f"violated: {inequality} ({lhs:.6g} > {rhs:.6g})")
        self.inequality = inequality
        self.lhs = lhs
        self.rhs = rhs


class DegenerateConstruction(DRBoundsError):
    pass


class InvalidDensity(DRBoundsError, ValueError):
    pass


class EstimatorFailure(DRBoundsError):
    def __init__(self, rep: int, cause: Exception):
        super().__init__(f"estimator failed in replication {rep}: {cause}")
        self.rep = rep


class ConfigError(DRBoundsError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
