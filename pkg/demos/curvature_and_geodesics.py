"""
Curvature, geodesics and distance on the builtin charts
=======================================================

Run with ``python3 demos/curvature_and_geodesics.py``.
"""

# %%
# A chart is a metric on a planar domain. The stereographic sphere of
# radius R has constant curvature 1/R^2; the Poincare disc has -k.
import numpy as np

from regulus.chart import builtin_surface, eval_metric_jet
from regulus.geodesic import exp_map, laplacian_on_rays, riemann_distance
from regulus.tensor import christoffel, curvature_at

sphere = builtin_surface("sphere", (2.0,))
disc = builtin_surface("hyperbolic", (1.0,))
pts = np.array([[0.0, 0.0], [0.3, -0.2], [0.7, 0.1]])
print("K on sphere(2):   ", curvature_at(sphere, pts))
print("K on hyperbolic(1):", curvature_at(disc, pts))

# %%
# Christoffel symbols come straight from the metric jet. Polar coordinates
# on the flat plane give the textbook values at r = 2.
gam = christoffel(eval_metric_jet(builtin_surface("polar-flat"), (2.0, 0.0)))
print("Gamma^1_22 =", gam(1, 2, 2), " Gamma^2_12 =", gam(2, 1, 2))

# %%
# Distances are found by shooting geodesics. Radial distance on the unit
# sphere chart is 2 arctan(r).
unit = builtin_surface("sphere", (1.0,))
for r in (0.25, 0.5, 0.9):
    d = riemann_distance(unit, (0.0, 0.0), (r, 0.0))
    print(f"r={r:4}: d={d:.10f}  closed form={2 * np.arctan(r):.10f}")

# %%
# The exponential map walks a unit-speed geodesic from a point.
print("exp_p(1.0 * e2) from (1, 0):", exp_map(unit, (1.0, 0.0), (0.0, 1.0), 1.0))

# %%
# The Laplacian of the distance function sits between the model values
# sqrt(k) cot(sqrt(k) r) and sqrt(k) coth(sqrt(k) r).
radii = np.array([0.1, 0.3, 0.5])
lap = laplacian_on_rays(unit, (0.0, 0.0), radii, 8)
print("Laplacian of distance, min over rays:", lap.min(axis=0))
print("cot(r):", 1 / np.tan(radii))
