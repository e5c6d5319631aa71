"""Exception hierarchy shared by every module."""


class ApproxConvexError(Exception):
    """Base class for all errors raised by the package."""


class SizeLimitError(ApproxConvexError):
    """An enumeration would exceed a configured size cap."""

    def __init__(self, what, count, cap):
        self.what = what
        self.count = count
        self.cap = cap
        super().__init__(f"{what}: count {count} exceeds cap {cap}")


class EvaluationError(ApproxConvexError):
    """An evaluator returned a non-finite value or failed at a point."""


class DomainMismatchError(ApproxConvexError):
    """A test set refers to a different domain than the sampled function."""


class DomainError(ApproxConvexError):
    """A function was evaluated outside its domain of definition."""


class ParameterError(ApproxConvexError):
    """Invalid parameter combination."""


class StructuralError(ApproxConvexError):
    """Malformed linear program (dimension mismatch, non-finite data)."""


class SolverError(ApproxConvexError):
    """The LP solver failed (iteration cap reached)."""


class OracleError(ApproxConvexError):
    """An oracle violated its contract."""

    def __init__(self, message, step=None):
        self.step = step
        super().__init__(message if step is None else f"step {step}: {message}")


class OffRayError(ApproxConvexError):
    """A radial lift was evaluated off every sampled ray."""
