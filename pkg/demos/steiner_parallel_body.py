"""
Parallel bodies and the Steiner polynomial
==========================================

Pushing a convex curve outward by eps sweeps out a region whose area is a
polynomial in eps with the quermassintegrals as coefficients. Here that
polynomial is compared with a brute-force Monte-Carlo count of the points
within eps of an ellipse.
"""

import numpy as np

from starflow.functionals import parallel_volume_oracle, quermassintegrals, steiner_polynomial
from starflow.geometry import shape_from_radial
from starflow.shapes import ShapeDescriptor, init_shape
from starflow.sphere_grid import build_grid

grid = build_grid(1, 256)
rho, _ = init_shape(ShapeDescriptor.ellipsoid(1.5, 1.0), grid)
geom = shape_from_radial(rho, grid)

# W0 is the area, W1 half the perimeter and W2 is pi for every convex curve
W = quermassintegrals(geom)
print("W =", W)

for eps in (0.0, 0.05, 0.1, 0.25):
    poly = steiner_polynomial(W, eps)
    mc, stderr = parallel_volume_oracle(geom, eps, samples=200_000, seed=1)
    print(f"eps={eps:4.2f}  Steiner {poly:.5f}   Monte-Carlo {mc:.5f} +- {stderr:.5f}")

# For the unit disc the polynomial collapses to pi (1 + eps)^2
disc = shape_from_radial(np.ones(grid.shape), grid)
print("disc, eps=0.1:", steiner_polynomial(quermassintegrals(disc), 0.1), "vs", np.pi * 1.21)
