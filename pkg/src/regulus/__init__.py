"""Numerical toolkit for intrinsic and extrinsic alpha-regularity of surface metrics."""

__version__ = "0.1.0"

from .chart import MetricChart, builtin_surface, load_grid_metric  # noqa: E402
from .geodesic import exp_map, geodesic_ball, riemann_distance  # noqa: E402
from .isothermal import build_isothermal_chart  # noqa: E402
from .radius import RegularityQuery, certify_rho_ext, global_regularity, rho_int  # noqa: E402
from .tensor import christoffel, curvature_at, gauss_curvature  # noqa: E402

__all__ = [
    "MetricChart",
    "RegularityQuery",
    "build_isothermal_chart",
    "builtin_surface",
    "certify_rho_ext",
    "christoffel",
    "curvature_at",
    "exp_map",
    "gauss_curvature",
    "geodesic_ball",
    "global_regularity",
    "load_grid_metric",
    "rho_int",
    "riemann_distance",
]
