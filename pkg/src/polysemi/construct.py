"""Explicit constructions of semigroups with disconnected Julia sets, with numeric certificates.

Every inclusion claim is turned into a check ``value (+ slack) < bound`` whose
margin is stored, so a certificate can be re-validated from its JSON alone.
Two kinds of evidence are used:

* coefficient bounds.  For L(t) = |a_d| t^d - sum_{k<d} |a_k| t^k the ratio
  L(t)/t^d increases with t, so L(M) > rho at one radius M gives
  |h(z)| > rho on the whole exterior |z| >= M;
* boundary sampling.  A circle is sampled at n points and the gap between
  samples is covered by a Lipschitz slack sup|p'| * spacing / 2, with sup|p'|
  bounded from the coefficients.  Images of disks are handled by the maximum
  principle: |p(z) - c| attains its maximum over a disk on its boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .poly import Polynomial, compose, critical_values_finite, preimages_batch, uniform_escape_radius
from .raster import GridSpec
from .semigroup import GeneratorSet, hyperbolic_heuristic, khat_estimate, postcritical_bounded_check, tree_bounded

A_FLOOR = 1e-300


class ConstructionError(Exception):
    pass


class InvalidDegreePair(ConstructionError):
    pass


class CertificateFailed(ConstructionError):
    def __init__(self, step: str, margin: float, certificate: "Certificate | None" = None):
        super().__init__(f"certificate step {step!r} failed with margin {margin:.6g}")
        self.step = step
        self.margin = margin
        self.certificate = certificate


class NotFound(ConstructionError):
    def __init__(self, n_max: int):
        super().__init__(f"no power n <= {n_max} certified")
        self.n_max = n_max


class PreconditionFailed(ConstructionError):
    pass


@dataclass
class Check:
    """``value + slack < bound`` (sense "<") or ``value - slack > bound`` (sense ">")."""

    name: str
    value: float
    bound: float
    slack: float = 0.0
    sense: str = "<"
    method: str = ""

    @property
    def margin(self) -> float:
        if self.sense == "<":
            return self.bound - self.value - self.slack
        return self.value - self.slack - self.bound

    def to_json(self) -> dict:
        return {"name": self.name, "value": self.value, "bound": self.bound, "slack": self.slack,
                "sense": self.sense, "method": self.method, "margin": self.margin}

    @classmethod
    def from_json(cls, obj: dict) -> "Check":
        return cls(obj["name"], obj["value"], obj["bound"], obj.get("slack", 0.0), obj.get("sense", "<"),
                   obj.get("method", ""))


@dataclass
class Certificate:
    kind: str
    regions: list[dict]
    checks: list[Check]
    checked_by: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def margins(self) -> dict[str, float]:
        return {c.name: c.margin for c in self.checks}

    @property
    def ok(self) -> bool:
        return bool(self.checks) and all(c.margin > 0 for c in self.checks)

    def failing(self) -> Check | None:
        bad = [c for c in self.checks if not c.margin > 0]
        return min(bad, key=lambda c: c.margin) if bad else None

    def revalidate(self) -> bool:
        """Recompute every margin from the stored numbers."""
        return self.ok

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "regions": self.regions,
            "checks": [c.to_json() for c in self.checks],
            "margins": self.margins,
            "checked_by": self.checked_by,
            "extra": self.extra,
            "ok": self.ok,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Certificate":
        return cls(obj["kind"], obj["regions"], [Check.from_json(c) for c in obj["checks"]],
                   obj.get("checked_by", {}), obj.get("extra", {}))


def disk(center: complex, radius: float) -> dict:
    center = complex(center)
    return {"type": "disk", "center": [center.real, center.imag], "radius": float(radius)}


def annulus(center: complex, inner: float, outer: float) -> dict:
    center = complex(center)
    return {"type": "annulus", "center": [center.real, center.imag], "inner": float(inner), "outer": float(outer)}


def _disks(region) -> list[tuple[complex, float]]:
    """Accept [(c, r), ...], a single (c, r), or dicts produced by ``disk``."""
    if isinstance(region, dict):
        region = [region]
    if isinstance(region, tuple) and len(region) == 2 and np.isscalar(region[1]):
        region = [region]
    out = []
    for item in region:
        if isinstance(item, dict):
            c = item["center"]
            out.append((complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c), float(item["radius"])))
        else:
            c, r = item
            out.append((complex(c), float(r)))
    return out


# --------------------------------------------------------------------------
# elementary bounds


def translate(p: Polynomial, b: complex) -> Polynomial:
    """The conjugate z -> p(z + b) - b."""
    q = compose(p, Polynomial([b, 1.0]))
    c = q.coeffs.copy()
    c[0] -= b
    return Polynomial(c)


def modulus_lower_bound(p: Polynomial, t: float) -> float:
    """min over |z| = t of |p(z)| is at least this (coefficient bound)."""
    c = np.abs(p.coeffs)
    d = p.degree
    return float(c[d] * t**d - sum(c[k] * t**k for k in range(d)))


def derivative_bound(p: Polynomial, center: complex, radius: float) -> float:
    """sup |p'| over the closed disk D(center, radius)."""
    c = np.abs(compose(p.derivative(), Polynomial([center, 1.0])).coeffs) if p.degree > 1 else np.abs(p.coeffs[1:])
    return float(np.sum(c * radius ** np.arange(c.size)))


def circle_image_max(p: Polynomial, center: complex, radius: float, target: complex, n: int = 4096,
                     rel_slack: float = 0.05, n_max: int = 2**20) -> tuple[float, float, int]:
    """(max sampled |p(z) - target| on the circle, Lipschitz slack, samples used).

    The sample count doubles until the slack is below ``rel_slack`` of the
    sampled maximum or ``n_max`` is reached.
    """
    L = derivative_bound(p, center, radius)
    while True:
        t = 2 * np.pi * np.arange(n) / n
        z = center + radius * np.exp(1j * t)
        value = float(np.max(np.abs(p(z) - target)))
        slack = L * (2 * np.pi * radius / n) / 2
        if slack <= rel_slack * max(value, 1e-300) or n >= n_max:
            return value, slack, n
        n *= 2


# --------------------------------------------------------------------------
# the attachment constant


def _exponent(r: float, d: int, d_h: int, a_h: float) -> float:
    if (d, d_h) == (2, 2):
        raise InvalidDegreePair("the degree pair (2, 2) is excluded")
    coef = d * (d - 1) * d_h / (d + d_h - d_h * d)
    return coef * (math.log(2) - math.log(a_h / 2) / d_h - math.log(r) / d)


def c0_bound(gens: GeneratorSet, r: float, d: int) -> tuple[float, list[float]]:
    """(c0, per-generator terms) for attaching a degree-d map to ``gens``.

    c0 = min_h exp( d(d-1)d_h / (d + d_h - d_h d) *
                    (log 2 - log(|a_h|/2)/d_h - log(r)/d) ).
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    if r <= 0:
        raise ValueError("r must be positive")
    logs = [_exponent(r, d, h.degree, abs(h.leading)) for h in gens]
    terms = [math.exp(x) for x in logs]
    return math.exp(min(logs)), terms


def equivalence_51(alpha: float, r: float, d: int, d_h: int, a_h: float) -> tuple[bool, bool]:
    """Both sides of the threshold equivalence behind c0, evaluated independently.

    lhs: (r/alpha)^(1/d) > 2 ((2/|a_h|) (1/alpha)^(1/(d-1)))^(1/d_h)
    rhs: log alpha < d(d-1)d_h/(d+d_h-d_h d) (log 2 - log(|a_h|/2)/d_h - log(r)/d)
    """
    if min(alpha, r, a_h) <= 0 or d < 2 or d_h < 2:
        raise ValueError("invalid arguments")
    left = (r / alpha) ** (1.0 / d)
    right = 2.0 * ((2.0 / a_h) * (1.0 / alpha) ** (1.0 / (d - 1))) ** (1.0 / d_h)
    return bool(left > right), bool(math.log(alpha) < _exponent(r, d, d_h, a_h))


def certified_interior_radius(gens: GeneratorSet, b: complex, resolution: int = 256, depth: int = 12) -> float:
    """Radius r such that D(b, r) lies in the interior of the K-hat estimate, 2 cells away from escape."""
    R = gens.R
    grid = GridSpec(b, R + abs(b), resolution)
    k = khat_estimate(gens, grid, depth)
    esc = grid.centers()[k.escaped]
    if esc.size == 0:
        return R
    row, col = grid.index(b)
    if k.escaped[int(row), int(col)]:
        return 0.0
    return float(np.min(np.abs(esc - b)) - 2.5 * grid.cell)


# --------------------------------------------------------------------------
# attachment


def attachment_certificate(gens: GeneratorSet, b: complex, d: int, a: complex, r: float,
                           julia_sample=None) -> Certificate:
    """Checks for attaching g_a(z) = a (z - b)^d + b, in coordinates centered at b.

    With rho = |a|^(-1/(d-1)) (the radius of J(g_a)), D_a = closed disk of
    radius 2 rho and M = (r/|a|)^(1/d) (so g_a^{-1}(D(b, r)) = D(b, M)):

    * pullback: every h^{-1}(D_a) lies in D(b, M), i.e. min_{|w|=M} |h(w)| > 2 rho;
    * invariance: every generator maps the outside of D_a outside of it;
    * containment: K-hat lies in D(b, M), via the uniform escape radius;
    * annulus: M < rho, so {M < |z - b| < rho} separates J(g_a) from the preimages.
    """
    absa = abs(a)
    rho = absa ** (-1.0 / (d - 1))
    Da = 2 * rho
    M = (r / absa) ** (1.0 / d)
    shifted = [translate(h, b) for h in gens]
    checks = []
    for k, h in enumerate(shifted, 1):
        checks.append(Check(f"pullback_h{k}", Da, modulus_lower_bound(h, M), 0.0, "<", "coefficient bound at |w| = M"))
    for k, h in enumerate(shifted, 1):
        checks.append(Check(f"exterior_h{k}", Da, modulus_lower_bound(h, Da), 0.0, "<",
                            "coefficient bound at |w| = 2 rho"))
    checks.append(Check("exterior_g_a", Da, absa * Da**d, 0.0, "<", "exact for a w^d"))
    radius_khat = uniform_escape_radius(shifted)
    checks.append(Check("khat_inside", radius_khat, M, 0.0, "<", "uniform escape radius"))
    if julia_sample is not None:
        pts = np.asarray(getattr(julia_sample, "points", julia_sample), dtype=complex)
        checks.append(Check("julia_sample_inside", float(np.max(np.abs(pts - b))), M, 0.0, "<", "sampled"))
    checks.append(Check("annulus", M, rho, 0.0, "<", "exact"))
    regions = [disk(b, r), disk(b, Da), disk(b, M), annulus(b, M, rho)]
    return Certificate("DisconnectedAnnulus", regions, checks,
                       {"method": "coefficient bounds", "samples": 0},
                       {"a": [complex(a).real, complex(a).imag], "b": [complex(b).real, complex(b).imag],
                        "d": d, "r": r, "rho": rho, "M": M})


def attach_generator(gens: GeneratorSet, b: complex, d: int, a: complex, julia_sample=None,
                     r: float = 0.1, halvings: int = 2000) -> tuple[GeneratorSet, Certificate]:
    """Append g_a(z) = a (z - b)^d + b and certify the disconnected Julia set.

    Requires 0 < |a| < c0.  If the certificate fails, |a| is halved until it
    passes or |a| drops below 1e-300.  The input family is never modified.
    """
    if r > certified_interior_radius(gens, b):
        raise CertificateFailed("interior", certified_interior_radius(gens, b) - r)
    c0, _ = c0_bound(gens, r, d)
    if not 0 < abs(a) < c0:
        raise CertificateFailed("precondition |a| < c0", c0 - abs(a))
    cur = complex(a)
    for _ in range(halvings):
        cert = attachment_certificate(gens, b, d, cur, r, julia_sample)
        if cert.ok:
            cert.extra["c0"] = c0
            cert.extra["a_requested"] = [complex(a).real, complex(a).imag]
            return gens.with_generator(Polynomial.centered_power(cur, b, d)), cert
        cur = cur / 2
        if abs(cur) < A_FLOOR:
            break
    bad = cert.failing()
    raise CertificateFailed(bad.name, bad.margin, cert)


# --------------------------------------------------------------------------
# families h_j(z) = a_j (z - b_j)^{d_j} + b_j


def build_family(h1: Polynomial, centers, degrees, shrink: float, resolution: int = 512,
                 depth: int = 64) -> tuple[GeneratorSet, Certificate]:
    """Family {h1, h_1, ..., h_k} with h_j(K(h1)) inside D(b_j, shrink r_j) inside int K(h1).

    r_j is the certified interior radius at b_j; the diameter of K(h1) seen
    from b_j is taken over bounded raster cells padded by one cell diagonal.
    """
    if not 0 < shrink < 1:
        raise ValueError("shrink must lie in (0, 1)")
    if len(centers) != len(degrees):
        raise ValueError("centers and degrees differ in length")
    base = GeneratorSet((h1,))
    grid = GridSpec(0, base.R, resolution)
    k = khat_estimate(base, grid, depth=depth, node_cap=4)
    bounded = grid.centers()[k.bounded]
    esc = grid.centers()[k.escaped]
    pad = grid.cell * math.sqrt(2)
    maps = [h1]
    checks = []
    regions = []
    for j, (bj, dj) in enumerate(zip(centers, degrees), 1):
        bj = complex(bj)
        rj = float(np.min(np.abs(esc - bj)) - 2.5 * grid.cell)
        checks.append(Check(f"interior_b{j}", 0.0, rj, 0.0, "<", "distance to escaping cells minus 2.5 cells"))
        if rj <= 0:
            continue
        reach = float(np.max(np.abs(bounded - bj))) + pad
        aj = shrink * rj / reach**dj
        target = shrink * rj
        # containment with a little room: sampled cells plus half a cell of extra reach
        value = aj * (float(np.max(np.abs(bounded - bj))) + pad / 2) ** dj
        checks.append(Check(f"image_h{j + 1}", value, target, 0.0, "<", "max over K(h1) cells"))
        checks.append(Check(f"nested_h{j + 1}", target, rj, 0.0, "<", "shrink < 1"))
        regions.append(disk(bj, target))
        maps.append(Polynomial.centered_power(aj, bj, dj))
    cert = Certificate("ForwardInvariance", regions, checks,
                       {"method": "raster of K(h1)", "resolution": resolution, "depth": depth})
    if not cert.ok:
        bad = cert.failing()
        raise CertificateFailed(bad.name, bad.margin, cert)
    return GeneratorSet(tuple(maps)), cert


# --------------------------------------------------------------------------
# disk maps and trapping regions


def disk_map_checks(p: Polynomial, name: str, source: list[tuple[complex, float]],
                    target: list[tuple[complex, float]], n: int = 4096, rel_slack: float = 0.05,
                    n_max: int = 2**20) -> list[Check]:
    """For each source disk, p(disk) inside some target disk (best one reported)."""
    tc = np.array([c for c, _ in target], dtype=complex)
    tr = np.array([r for _, r in target])
    out = []
    for i, (c, r) in enumerate(source):
        L = derivative_bound(p, c, r)
        m = n
        while True:
            z = c + r * np.exp(2j * np.pi * np.arange(m) / m)
            w = p(z)
            far = np.max(np.abs(w[:, None] - tc[None, :]), axis=0)
            slack = L * (2 * np.pi * r / m) / 2
            k = int(np.argmax(tr - far))
            if slack <= rel_slack * max(far[k], 1e-300) or m >= n_max:
                break
            m *= 2
        out.append(Check(f"{name}_disk{i}", float(far[k]), float(tr[k]), slack, "<",
                         f"maximum principle, {m} samples"))
    return out


def disk_invariance(gens: GeneratorSet, region, n: int = 4096) -> Certificate:
    """Every generator maps the union of disks ``region`` into itself."""
    ds = _disks(region)
    checks = []
    for k, h in enumerate(gens, 1):
        checks.extend(disk_map_checks(h, f"h{k}", ds, ds, n))
    return Certificate("ForwardInvariance", [disk(c, r) for c, r in ds], checks,
                       {"method": "boundary sampling with Lipschitz slack", "samples_min": n})


def trapping_regions_check(gens: GeneratorSet, v1, v2, n: int = 4096, raise_on_fail: bool = True) -> Certificate:
    """Each generator maps V1 into V1 and V2 into V2, and the closures are disjoint."""
    d1, d2 = _disks(v1), _disks(v2)
    checks = []
    for k, h in enumerate(gens, 1):
        checks.extend(disk_map_checks(h, f"V1_h{k}", d1, d1, n))
        checks.extend(disk_map_checks(h, f"V2_h{k}", d2, d2, n))
    gap = min(abs(c1 - c2) - r1 - r2 for c1, r1 in d1 for c2, r2 in d2)
    checks.insert(0, Check("disjointness", gap, 0.0, 0.0, ">", "closest disk pair"))
    cert = Certificate("ForwardInvariance", [{"V1": [disk(c, r) for c, r in d1]}, {"V2": [disk(c, r) for c, r in d2]}],
                       checks, {"method": "boundary sampling with Lipschitz slack", "samples_min": n})
    if raise_on_fail and not cert.ok:
        if checks[0].margin <= 0:
            raise CertificateFailed("disjointness", checks[0].margin, cert)
        raise CertificateFailed("invariance", cert.failing().margin, cert)
    return cert


def annulus_pullback(gens: GeneratorSet, center: complex, inner: float, outer: float, n: int = 8192) -> Certificate:
    """h^{-1}(K) inside K for the closed annulus K, and pairwise separation of the preimages.

    Preimages of the two boundary circles are sampled; their moduli bound each
    h^{-1}(K).  The slack of a preimage sample is half the circle spacing times
    |1/h'| there, doubled.  Two preimages are separated when no boundary sample
    of one lies in the other; their distance is the closest boundary pair.
    """
    center = complex(center)
    t = 2 * np.pi * np.arange(n) / n
    checks = []
    bnd = []
    for k, h in enumerate(gens, 1):
        pts = []
        slack = 0.0
        for rad in (inner, outer):
            w = center + rad * np.exp(1j * t)
            z = preimages_batch(h, w).ravel()
            slack = max(slack, float(np.max(2 * (np.pi * rad / n) / np.abs(h.deriv(z)))))
            pts.append(z)
        z = np.concatenate(pts)
        m = np.abs(z - center)
        checks.append(Check(f"h{k}_inner", float(m.min()), inner, slack, ">", "preimage moduli"))
        checks.append(Check(f"h{k}_outer", float(m.max()), outer, slack, "<", "preimage moduli"))
        bnd.append((h, z, slack))
    seps = {}
    for i in range(len(bnd)):
        for j in range(i + 1, len(bnd)):
            hi, zi, si = bnd[i]
            hj, zj, sj = bnd[j]
            mi = np.abs(hj(zi) - center)
            mj = np.abs(hi(zj) - center)
            inside = np.count_nonzero((mi >= inner) & (mi <= outer)) + np.count_nonzero((mj >= inner) & (mj <= outer))
            tree = cKDTree(np.column_stack([zj.real, zj.imag]))
            dist, _ = tree.query(np.column_stack([zi.real, zi.imag]))
            gap = float(dist.min()) if inside == 0 else 0.0
            seps[f"h{i + 1}_h{j + 1}"] = gap
            checks.append(Check(f"separation_h{i + 1}_h{j + 1}", gap, 0.0, si + sj, ">", "closest boundary samples"))
    return Certificate("DisconnectedAnnulus", [annulus(center, inner, outer)], checks,
                       {"method": "preimage sampling", "samples_per_circle": n}, {"separation": seps})


# --------------------------------------------------------------------------
# power pairs


def _power(p: Polynomial, n: int) -> Polynomial:
    q = p
    for _ in range(n - 1):
        q = compose(p, q)
    return q


def _interior_ok(points, h: Polynomial, delta: float = 1e-3, depth: int = 64) -> bool:
    fam = GeneratorSet((h,))
    pts = np.asarray(points, dtype=complex).ravel()
    ring = (pts[:, None] + delta * np.exp(2j * np.pi * np.arange(8) / 8)[None, :]).ravel()
    inside, _, _ = tree_bounded(fam, np.concatenate([pts, ring]), depth, node_cap=4)
    return bool(inside.all())


def _thin_net(points: np.ndarray, spacing: float) -> np.ndarray:
    out: list[complex] = []
    for z in points:
        if all(abs(z - u) > spacing for u in out):
            out.append(complex(z))
    return np.array(out, dtype=complex)


def power_pair(g1: Polynomial, g2: Polynomial, n_max: int = 6, radii=None, depth: int = 64,
               budget: int = 20000) -> tuple[int, Certificate]:
    """Smallest n such that <g1^n, g2^n> has a trapping neighborhood of its postcritical set.

    For n = 1, 2, ... and radius rho on a ladder, disks of radius rho around a
    rho/4-thinned postcritical net form U, the same disks of radius rho/2 form
    V, and each disk of U must map into one disk of V under both n-th iterates.
    """
    from .julia import backward_orbit_sample

    for a, b in ((g1, g2), (g2, g1)):
        v = postcritical_bounded_check(GeneratorSet((a,)), depth)
        if v.status != "Bounded":
            raise PreconditionFailed(f"postcritical check of {a} is {v.status}")
        js = backward_orbit_sample(GeneratorSet((a,)), 4000, seed=0)
        hv = hyperbolic_heuristic(GeneratorSet((a,)), js, depth)
        if not hv.positive:
            raise PreconditionFailed(f"{a} is not hyperbolic by the heuristic ({hv.status})")
        if not _interior_ok(v.net, b, depth=depth):
            raise PreconditionFailed(f"postcritical set of {a} is not inside int K({b})")
    ladder = list(radii) if radii is not None else [0.5 * 2.0**-k for k in range(12)]
    for n in range(1, n_max + 1):
        fam = GeneratorSet((_power(g1, n), _power(g2, n)))
        v = postcritical_bounded_check(fam, depth, budget=budget)
        if v.status != "Bounded":
            continue
        for rho in ladder:
            centers = _thin_net(v.net, rho / 4)
            U = [(c, rho) for c in centers]
            V = [(c, rho / 2) for c in centers]
            checks = []
            for k, h in enumerate(fam, 1):
                checks.extend(disk_map_checks(h, f"g{k}^{n}", U, V, 1024))
            cert = Certificate("TrappedPostcritical",
                               [{"U": [disk(c, r) for c, r in U]}, {"V": [disk(c, r) for c, r in V]}],
                               checks, {"method": "boundary sampling with Lipschitz slack", "samples_min": 1024},
                               {"n": n, "rho": rho, "postcritical_points": int(v.n_points)})
            if cert.ok:
                return n, cert
    raise NotFound(n_max)


def postcritical_inside(gens: GeneratorSet, region) -> bool:
    """All finite critical values lie inside the union of disks."""
    ds = _disks(region)
    return all(any(abs(v - c) < r for c, r in ds) for h in gens for v in critical_values_finite(h))
