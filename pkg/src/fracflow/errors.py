"""Exception hierarchy with machine-readable cause codes."""

from __future__ import annotations


class FracFlowError(Exception):
    """Base class. ``code`` is a stable identifier used in reports and exit paths."""

    code = "error"
    exit_status = 1


class DomainError(FracFlowError, ValueError):
    code = "domain"
    exit_status = 2


class SizeError(FracFlowError, ValueError):
    code = "size"
    exit_status = 2


class GeometryError(FracFlowError):
    code = "geometry"
    exit_status = 4


class MethodError(FracFlowError):
    """Requested method does not apply to the input (e.g. non-convex set)."""

    code = "method"
    exit_status = 4


class AccuracyError(FracFlowError):
    """A quadrature or extrapolation failed its internal consistency check."""

    code = "accuracy"
    exit_status = 4


class SingularityError(FracFlowError, ValueError):
    code = "singularity"
    exit_status = 4


class AlgebraError(FracFlowError):
    """An exact algebraic identity failed; signals an implementation bug."""

    code = "algebra"
    exit_status = 4


class ResolutionError(FracFlowError):
    """Grid function carries too much energy near the Nyquist band."""

    code = "resolution"
    exit_status = 4


class DegenerateInputError(FracFlowError, ValueError):
    code = "degenerate_input"
    exit_status = 4


class DegenerateFitError(FracFlowError):
    code = "degenerate_fit"
    exit_status = 4


class FlowEventError(FracFlowError):
    """The flow left its admissible class (convexity loss) and was halted."""

    code = "flow_event"
    exit_status = 3

    def __init__(self, message: str, state=None, record=None):
        super().__init__(message)
        self.state = state
        self.record = record


class ConfigError(FracFlowError, ValueError):
    code = "config"
    exit_status = 2

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
