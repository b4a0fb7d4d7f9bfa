"""
Running checks and reading the report
=====================================

Each check returns measured values, bounds and a status. A suite run
bundles them into a JSON document that is byte-stable for a fixed seed.

Run with ``python3 demos/verification_report.py``.
"""

# %%
import json

from regulus.harness import Sampling, SurfaceSpec, verify_case

spec = SurfaceSpec("sphere", (1.0,))

# %%
# Inside the hypothesis (delta^2 kappa below pi^2/8) the distortion check
# measures sup |log phi| and the distance-ratio range.
case = verify_case("thm31", spec, 0.5, delta=0.3)
print(case.status, case.measured, case.bound)

# %%
# Outside it the check is skipped, not failed.
print(verify_case("thm31", spec, 0.5, delta=1.2).status)

# %%
# Small perturbations of the flat metric: curvature on certified balls.
for a in (0.001, 0.02):
    c = verify_case("lemma-curv", SurfaceSpec("perturbed-flat", (a, 1.0)), 0.5, delta=0.2,
                    sampling=Sampling(rays=16, radial=16))
    print(f"a={a}: {c.status} measured={c.measured}")

# %%
# The serialised record matches one entry of the report's "cases" list.
print(json.dumps(case.as_dict(), indent=2))
