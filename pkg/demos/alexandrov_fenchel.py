"""
Alexandrov-Fenchel ratios of perturbed spheres
==============================================

For a k-convex domain the normalized ratio W_{k+1} / W_k^{(n-k)/(n+1-k)} is at
least one, with equality only for balls. We perturb the unit sphere with a
few low-degree spherical harmonics and watch the ratio stay above one.
"""

import numpy as np

from starflow.functionals import af_ratio
from starflow.geometry import admissibility_report, shape_from_radial
from starflow.shapes import ShapeDescriptor, init_shape
from starflow.sphere_grid import build_grid

grid = build_grid(2, (32, 64))
rng = np.random.default_rng(7)

print(" amplitude   mean convex   AF(k=0)    AF(k=1)")
for amp in (0.0, 0.02, 0.05, 0.1, 0.15):
    terms = [(l, m, amp * rng.uniform(-1, 1)) for l in (2, 3) for m in range(-l, l + 1)]
    rho, _ = init_shape(ShapeDescriptor.harmonic(terms), grid)
    geom = shape_from_radial(rho, grid)
    convex = admissibility_report(geom, 1).admissible
    k1 = f"{af_ratio(geom, 1):.6f}" if convex else "   n/a"
    print(f"   {amp:4.2f}       {str(convex):5}      {af_ratio(geom, 0):.6f}   {k1}")
