"""Cantor set of round circles.

The semigroup generated by z^3 and z^2/4 has a Julia set made of concentric
circles between |z| = 1 (the Julia set of z^3) and |z| = 4 (that of z^2/4).
Each generator pulls the whole picture into one of two thinner annuli, so the
radii form a Cantor set.  We sample the set by random inverse iteration and
look at the histogram of moduli.
"""

import numpy as np

from polysemi import GeneratorSet, Polynomial, backward_orbit_sample, self_similarity_residual
from polysemi.semigroup import median_spacing

gens = GeneratorSet((Polynomial([0, 0, 0, 1]), Polynomial([0, 0, 0.25])))
cloud = backward_orbit_sample(gens, 50_000, seed=0)
r = np.abs(cloud.points)
print(f"{len(cloud)} points, {r.min():.4f} <= |z| <= {r.max():.4f}")

# First generation: z^3 pulls [1, 4] back to [1, 4^(1/3)], z^2/4 to [2, 4].
counts, edges = np.histogram(r, bins=np.linspace(1, 4, 61))
for lo, c in zip(edges[:-1], counts):
    print(f"{lo:5.2f} {'#' * int(60 * c / counts.max())}")

gaps = np.diff(np.sort(r))
print("largest radial gaps:", np.round(np.sort(gaps)[-4:], 3))

# Backward self-similarity: the cloud compared with its own preimages.
res = self_similarity_residual(gens, cloud)
print(f"preimage residual {res:.3g} vs median spacing {median_spacing(cloud.points):.3g}")
