"""
Intrinsic and extrinsic regularity radii
========================================

``rho_int`` is the largest ball radius on which the curvature is small in
a scale-free Hoelder sense. ``rho_ext`` is the largest radius with a
certified chart whose metric is C^{2,alpha}-close to the identity.

Run with ``python3 demos/regularity_radii.py`` (takes about a minute).
"""

# %%
from regulus.chart import builtin_surface
from regulus.harness import Sampling
from regulus.radius import certify_rho_ext, rho_int

sampling = Sampling(rays=24, radial=24)

# %%
# Spheres: rho_int scales with R, so rho_int / R is the same for every R.
for R in (0.5, 1.0, 2.0):
    q = sampling.query(builtin_surface("sphere", (R,)), (0.0, 0.0), 0.5)
    ri = rho_int(q)
    print(f"sphere({R}): rho_int = {ri.value:.6f}   rho_int / R = {ri.value / R:.4f}")

# %%
# The flat plane never leaves the regime, so the search reaches its cap.
flat = rho_int(sampling.query(builtin_surface("flat"), (0.0, 0.0), 0.5))
print(f"flat: rho_int >= {flat.value:g} (capped: {flat.capped})")

# %%
# The extrinsic radius compares two chart constructions and keeps the
# better certificate. Each certificate is rechecked at twice the sampling.
q = sampling.query(builtin_surface("sphere", (1.0,)), (0.0, 0.0), 0.5)
ext = certify_rho_ext(q)
for name, est in ext.candidates.items():
    print(f"{name:10s} delta* = {est.value:.6f}")
cert = ext.certificate
print("best:", ext.best.candidate, " max norm:", round(cert.max_norm, 6), " passes:", cert.passes)
