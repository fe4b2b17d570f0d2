"""Attach a small cubic to z^2 - 1 and certify a disconnected Julia set.

The constant c0 bounds how large the new leading coefficient may be.  Below it
the cubic's Julia set (radius about |a|^(-1/2)) and the preimages of it under
z^2 - 1 are separated by an explicit annulus, and the postcritical set stays
bounded, so the new semigroup is postcritically bounded with disconnected
Julia set.
"""

from polysemi import GeneratorSet, Polynomial
from polysemi.construct import attach_generator, c0_bound, power_pair
from polysemi.semigroup import postcritical_bounded_check

base = GeneratorSet((Polynomial([-1, 0, 1]),))
c0, _ = c0_bound(base, 0.1, 3)
print(f"c0 = {c0:.4g}")

gens, cert = attach_generator(base, 0, 3, 1e-10)
for check in cert.checks:
    print(f"  {check.name:16} margin {check.margin:.3g}   ({check.method})")
print("annulus:", cert.regions[-1])
print("postcritical check:", postcritical_bounded_check(gens).status)

# Powers of two hyperbolic maps whose postcritical sets sit inside each
# other's filled Julia sets eventually trap the joint postcritical set.
n, cert = power_pair(Polynomial([-1, 0, 1]), Polynomial([0, 0, 0.25]))
print(f"power pair: n = {n}, rho = {cert.extra['rho']}")
