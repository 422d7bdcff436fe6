"""Exception hierarchy; the CLI maps these onto the exit-code contract."""


class FinslerError(Exception):
    """Base class for all package errors."""


class ValidationError(FinslerError):
    """Malformed inputs: bad scenario fields, bad zoo params, bad multi-index."""


class AdmissibilityError(FinslerError):
    """Evaluation at an inadmissible vector or outside the chart domain."""


class NumericalError(FinslerError):
    """Solver breakdown or derivative/quadrature tolerance exceeded (exit code 3)."""


class HypothesisRejection(FinslerError):
    """Sampled theorem hypotheses (curvature bound, a/b bounds) failed (exit code 2)."""
