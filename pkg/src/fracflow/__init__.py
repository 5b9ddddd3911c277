"""Numerical laboratory for the volume-preserving fractional curvature flow of convex curves."""

__version__ = "0.1.0"

from .curvature import (  # noqa: E402
    CurvatureSample,
    boundary_curvature,
    chord_curvature,
    circle_curvature,
    curvature_field,
    directional_derivative_H,
    frac_curvature_at,
    fractional_perimeter,
    pv_oracle,
)
from .errors import FracFlowError  # noqa: E402
from .geometry import HeightField, area, build_field, normal_and_jacobian, rescale_and_center, shape_metrics  # noqa: E402
from .flow import FlowConfig, FlowTrace, fit_exponential_rate, run  # noqa: E402
from .spectral import compute_symbol, evolve  # noqa: E402

__all__ = [
    "CurvatureSample", "FlowConfig", "FlowTrace", "FracFlowError", "HeightField", "area", "boundary_curvature",
    "build_field", "chord_curvature", "circle_curvature", "compute_symbol", "curvature_field",
    "directional_derivative_H", "evolve", "fit_exponential_rate", "frac_curvature_at", "fractional_perimeter",
    "normal_and_jacobian", "pv_oracle", "rescale_and_center", "run", "shape_metrics",
]
