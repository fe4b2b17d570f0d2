import json
import math

import numpy as np
import pytest

from oracles import C0_EXPONENT, C0_HAND, C0_QUOTED, H1_DISK_MAX, c0_by_bisection
from polysemi.construct import (Certificate, CertificateFailed, InvalidDegreePair, NotFound, PreconditionFailed,
                                annulus_pullback, attach_generator, attachment_certificate, build_family, c0_bound,
                                circle_image_max, derivative_bound, disk_invariance, equivalence_51,
                                modulus_lower_bound, postcritical_inside, power_pair, trapping_regions_check)
from polysemi.julia import backward_orbit_sample
from polysemi.poly import Polynomial, compose
from polysemi.raster import GridSpec
from polysemi.semigroup import GeneratorSet, hyperbolic_heuristic, khat_estimate, postcritical_bounded_check

G1 = Polynomial([-1, 0, 1])
G2 = Polynomial([0, 0, 0.25])
BASE = GeneratorSet((G1,))
EXAMPLE = GeneratorSet((compose(G1, G1), compose(G2, G2)))


def test_c0_example_against_oracles():
    c0, terms = c0_bound(BASE, 0.1, 3)
    assert abs(c0 - C0_HAND) <= 1e-12 * C0_HAND
    assert abs(math.log(c0) - C0_EXPONENT) < 1e-12
    assert abs(c0 - C0_QUOTED) / C0_QUOTED < 0.01
    assert abs(c0 - c0_by_bisection(0.1, 3, 2, 1.0)) / c0 < 1e-9
    assert terms == [c0]


def test_c0_takes_minimum_over_generators():
    gens = GeneratorSet((G1, Polynomial([0, 0, 0, 2])))
    c0, terms = c0_bound(gens, 0.1, 3)
    assert c0 == min(terms)
    for h, t in zip(gens, terms):
        assert abs(t - c0_by_bisection(0.1, 3, h.degree, abs(h.leading))) / t < 1e-9


def test_c0_invalid_degree_pair():
    with pytest.raises(InvalidDegreePair):
        c0_bound(BASE, 0.1, 2)


def test_c0_strictly_increasing_in_r():
    vals = [c0_bound(BASE, r, 3)[0] for r in (0.01, 0.05, 0.1, 0.2, 0.5)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def random_tuples(n, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        d, dh = int(rng.integers(2, 6)), int(rng.integers(2, 6))
        if (d, dh) == (2, 2):
            continue
        out.append((float(10 ** rng.uniform(-40, 2)), float(10 ** rng.uniform(-3, 1)), d, dh,
                    float(10 ** rng.uniform(-3, 3))))
    return out


def test_equivalence_agrees_on_random_tuples():
    tuples = random_tuples(10_000, 0)
    res = [equivalence_51(*t) for t in tuples]
    assert all(a == b for a, b in res)
    # both outcomes are exercised
    assert 0 < sum(a for a, _ in res) < len(res)


def test_equivalence_threshold_flip():
    for r, d, dh, ah in [(0.1, 3, 2, 1.0), (0.3, 2, 3, 0.5), (0.05, 4, 4, 2.0)]:
        star = c0_by_bisection(r, d, dh, ah)
        assert equivalence_51(star * (1 - 1e-10), r, d, dh, ah) == (True, True)
        assert equivalence_51(star * (1 + 1e-10), r, d, dh, ah) == (False, False)


def test_equivalence_at_half_c0():
    assert equivalence_51(C0_HAND / 2, 0.1, 3, 2, 1.0) == (True, True)


def test_elementary_bounds():
    p = Polynomial([1, -2, 0, 1])
    # |p(z)| >= |z|^3 - 2|z| - 1 on |z| = 3
    assert modulus_lower_bound(p, 3) == 27 - 6 - 1
    z = 3 * np.exp(2j * np.pi * np.arange(2000) / 2000)
    assert np.min(np.abs(p(z))) >= modulus_lower_bound(p, 3)
    w = 0.5 + 0.5 * np.exp(2j * np.pi * np.arange(2000) / 2000)
    assert np.max(np.abs(p.deriv(w))) <= derivative_bound(p, 0.5, 0.5)
    value, slack, _ = circle_image_max(compose(G1, G1), 0, 0.4, 0)
    assert abs(value - H1_DISK_MAX) < 1e-6 and slack >= 0


def test_attach_example_succeeds():
    new, cert = attach_generator(BASE, 0, 3, 1e-10)
    assert cert.ok and cert.kind == "DisconnectedAnnulus"
    assert all(m > 0 for m in cert.margins.values())
    names = set(cert.margins)
    assert {"pullback_h1", "exterior_h1", "exterior_g_a", "annulus"} <= names
    assert len(new) == 2 and len(BASE) == 1 and BASE.gens == (G1,)
    assert postcritical_bounded_check(new).status == "Bounded"


def test_attach_too_large_fails_loudly():
    c0, _ = c0_bound(BASE, 0.1, 3)
    with pytest.raises(CertificateFailed) as err:
        attach_generator(BASE, 0, 3, 10 * c0)
    assert err.value.margin < 0
    # the certificate itself fails at that size
    assert not attachment_certificate(BASE, 0, 3, 1e-3, 0.1).ok


def test_attach_outside_interior_fails():
    with pytest.raises(CertificateFailed):
        attach_generator(BASE, 1.5, 3, 1e-10)


def test_attach_keeps_khat():
    new, _ = attach_generator(BASE, 0, 3, 1e-10)
    grid = GridSpec(0, 2.0, 64)
    old = khat_estimate(BASE, grid, depth=24).bounded
    now = khat_estimate(new, grid, depth=24).bounded
    from scipy import ndimage

    band = ndimage.binary_dilation(old) & ~ndimage.binary_erosion(old)
    assert not np.any((old != now) & ~band)


def test_certificate_round_trip():
    _, cert = attach_generator(BASE, 0, 3, 1e-10)
    back = Certificate.from_json(json.loads(json.dumps(cert.to_json())))
    assert back.revalidate() and back.margins == cert.margins
    bad = json.loads(json.dumps(cert.to_json()))
    bad["checks"][0]["value"] = bad["checks"][0]["bound"] + 1
    assert not Certificate.from_json(bad).revalidate()


def test_build_family_example():
    fam, cert = build_family(G1, [0], [3], 0.5)
    assert len(fam) == 2 and cert.ok
    assert postcritical_bounded_check(fam).status == "Bounded"
    assert hyperbolic_heuristic(BASE, backward_orbit_sample(BASE, 5000, 0)).positive
    assert hyperbolic_heuristic(fam, backward_orbit_sample(fam, 5000, 0)).positive


def test_build_family_degenerate_fails():
    with pytest.raises(CertificateFailed):
        build_family(G1, [0.62], [3], 0.999)
    with pytest.raises(ValueError):
        build_family(G1, [0], [3], 1.0)


def test_disk_invariance_example():
    cert = disk_invariance(EXAMPLE, [(0, 0.4)])
    assert cert.ok
    assert abs(cert.checks[0].value - H1_DISK_MAX) < 1e-6


def test_annulus_pullback_separation():
    cert = annulus_pullback(EXAMPLE, 0, 0.4, 4.0)
    assert cert.extra["separation"]["h1_h2"] > 0.4
    assert cert.margins["h1_inner"] > 0 and cert.margins["h2_inner"] > 0


def test_trapping_examples():
    g = GeneratorSet((compose(G1, G1),))
    assert trapping_regions_check(g, [(0, 0.05)], [(-1, 0.05)]).ok
    with pytest.raises(CertificateFailed) as err:
        trapping_regions_check(g, [(0, 0.6)], [(-1, 0.6)])
    assert err.value.step == "disjointness"
    with pytest.raises(CertificateFailed) as err:
        trapping_regions_check(EXAMPLE, [(0, 0.4)], [(-1, 0.05)])
    assert err.value.step == "invariance"


def test_power_pair_examples():
    n, cert = power_pair(G1, G2)
    assert n == 2 and cert.ok and cert.kind == "TrappedPostcritical"
    sq = Polynomial([0, 0, 1])
    assert power_pair(sq, sq)[0] == 1


def test_power_pair_precondition_and_not_found():
    with pytest.raises(PreconditionFailed):
        power_pair(G1, Polynomial([-0.7, 0, 1]))
    with pytest.raises(NotFound):
        power_pair(G1, G2, n_max=1)


def test_postcritical_inside():
    assert postcritical_inside(EXAMPLE, [(0, 0.4), (-1, 0.1)])
    assert not postcritical_inside(EXAMPLE, [(0, 0.4)])
