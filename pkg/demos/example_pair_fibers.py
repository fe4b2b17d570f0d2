"""Fiber Julia sets of the pair ((z^2 - 1)^2, (z^2/4)^2).

The constant sequences give the Julia set of g1^2 (the basilica) and the
circle |z| = 4.  Mixed sequences give Jordan curves that wiggle at every scale;
the arc-chord ratio keeps growing as the curve is sampled more finely.
"""

from polysemi import GeneratorSet, GridSpec, Periodic, Polynomial, Word, compose
from polysemi.classify import pairwise_relation
from polysemi.geometry import fiber_curve, jordan_test, quasicircle_ratio
from polysemi.julia import fiber_raster, filled_radius
from polysemi.semigroup import IID, spec_id

g1, g2 = Polynomial([-1, 0, 1]), Polynomial([0, 0, 0.25])
gens = GeneratorSet((compose(g1, g1), compose(g2, g2)))
grid = GridSpec(0, 1.0625 * filled_radius(gens), 512)

for spec in (Periodic(Word((1,))), Periodic(Word((2,))), IID((0.5, 0.5), 7)):
    r = fiber_raster(gens, spec, grid, 20)
    v = jordan_test(r)
    line = f"{spec_id(spec):24} {v.status:10}"
    if v.status == "Jordan":
        coarse = quasicircle_ratio(fiber_curve(gens, spec, grid, 256, 1, 20)).global_max
        fine = quasicircle_ratio(fiber_curve(gens, spec, grid, 256, 16, 20)).global_max
        line += f" ratio {coarse:.3f} at 256 points, {fine:.3f} at 4096"
    print(line)

# Disjoint fiber Julia sets are nested.
rec = pairwise_relation(gens, Periodic(Word((1,))), Periodic(Word((2,))), 20, grid)
print("J(1,1,...) vs J(2,2,...):", rec["relation"], f"(distance {rec['min_distance']:.3f})")

r = fiber_raster(gens, IID((0.5, 0.5), 7), grid, 20)
r.write_pgm("fiber_iid7.pgm")
print("wrote fiber_iid7.pgm")
