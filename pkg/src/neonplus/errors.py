"""Exception hierarchy shared by the algorithm, verification and harness layers."""


class NeonError(Exception):
    """Base class for every error raised by this package."""


class DomainError(NeonError, ValueError):
    """An input lies outside the domain of an operation (e.g. a zero direction)."""


class ParameterError(NeonError, ValueError):
    """Algorithm parameters violate their validity ranges."""


class ConfigurationError(NeonError, ValueError):
    """A problem or experiment configuration is inconsistent."""


class NonFiniteEvaluationError(NeonError, FloatingPointError):
    """An oracle returned a non-finite value or gradient."""

    def __init__(self, what, point):
        self.what = what
        self.point = point
        super().__init__(f"non-finite {what} at point with norm "
                         f"{_safe_norm(point)!r}: {point!r}")


class NonConvergenceError(NeonError, RuntimeError):
    """An iterative method exhausted its budget.

    ``best`` holds the best iterate seen, ``diagnostics`` a free-form dict.
    """

    def __init__(self, message, best=None, diagnostics=None):
        super().__init__(message)
        self.best = best
        self.diagnostics = diagnostics or {}


class CertificationError(NeonError, RuntimeError):
    """A claimed certificate (descent, curvature, stationarity) failed verification."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class CertificationUnavailableError(NeonError, RuntimeError):
    """The verification layer could not produce a certificate."""


def _safe_norm(point):
    try:
        import numpy as np
        return float(np.linalg.norm(point))
    except Exception:  # pragma: no cover - diagnostic only
        return float("nan")
