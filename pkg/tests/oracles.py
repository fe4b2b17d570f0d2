"""Independent reference computations and frozen expected values.

Nothing here imports the package: every oracle uses a different method from
the implementation it checks (companion-matrix eigenvalues instead of the
simultaneous root iteration, bisection on the defining inequality instead of
the closed form, plain loops instead of vectorized kernels).
"""

import cmath
import math

import numpy as np

# values quoted by the source material
C0_QUOTED = 3.82e-10  # attaching a cubic to {z^2 - 1} with r = 0.1
EXAMPLE_DISK_RADIUS = 0.4  # g1^2(D) u g2^2(D) in D for D = D(0, 0.4)
EXAMPLE_ANNULUS = (0.4, 4.0)  # K = {0.4 <= |z| <= 4}
CANTOR_INNER, CANTOR_OUTER = 1.0, 4.0  # J(z^3) and J(z^2/4)

# derived by hand
GOLDEN = (1 + math.sqrt(5)) / 2
C0_EXPONENT = -12 * (math.log(2) + 0.5 * math.log(2) - math.log(0.1) / 3)  # = -21.68699...
C0_HAND = math.exp(C0_EXPONENT)
# sup over |z| = 0.4 of |z^4 - 2 z^2| (attained on the imaginary axis)
H1_DISK_MAX = 0.4**4 + 2 * 0.4**2
# h1^{-1}(|w| = 4) reaches |z| = sqrt(1 + sqrt 5) on the real axis; h2^{-1}(|w| = 0.4) is |z| = 25.6^(1/4)
H1_PREIMAGE_OUTER = math.sqrt(1 + math.sqrt(5))
H2_PREIMAGE_INNER = 25.6**0.25


def companion_roots(coeffs_ascending):
    """Roots via numpy's companion matrix eigenvalues."""
    return np.roots(np.asarray(coeffs_ascending, dtype=complex)[::-1])


def horner_loop(coeffs_ascending, z):
    acc = 0j
    for a in reversed(list(coeffs_ascending)):
        acc = acc * z + a
    return acc


def orbit(coeffs_list, word, z):
    """Apply coeffs_list[i-1] for i in word, first to last."""
    for i in word:
        z = horner_loop(coeffs_list[i - 1], z)
    return z


def c0_by_bisection(r, d, d_h, a_h):
    """Threshold alpha* of (r/alpha)^(1/d) > 2((2/a_h)(1/alpha)^(1/(d-1)))^(1/d_h), found by bisection on log alpha."""

    def holds(log_alpha):
        alpha = math.exp(log_alpha)
        return (r / alpha) ** (1 / d) > 2 * ((2 / a_h) * (1 / alpha) ** (1 / (d - 1))) ** (1 / d_h)

    lo, hi = -700.0, 700.0
    # the inequality holds for small alpha and fails for large alpha
    assert holds(lo) and not holds(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if holds(mid):
            lo = mid
        else:
            hi = mid
    return math.exp(lo)


def escapes(coeffs, z, R, n):
    for k in range(n):
        if abs(z) > R:
            return k
        z = horner_loop(coeffs, z)
    return k + 1 if abs(z) > R else -1


def circle(n, radius=1.0, center=0j, phase=0.0):
    return center + radius * np.exp(1j * (2 * np.pi * np.arange(n) / n + phase))


def polyline_length(points, closed=True):
    z = np.asarray(points)
    if closed:
        z = np.append(z, z[0])
    return float(np.abs(np.diff(z)).sum())


def brute_arc_ratio(points):
    """O(n^3) arc-length / chord ratio over all pairs, smaller-diameter arc, ties by fewer points."""
    z = list(points)
    n = len(z)
    best = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            a = z[i : j + 1]
            b = z[j:] + z[: i + 1]
            da = max(abs(p - q) for p in a for q in a)
            db = max(abs(p - q) for p in b for q in b)
            use_a = da < db or (da == db and len(a) <= len(b))
            arc = a if use_a else b
            L = sum(abs(arc[k + 1] - arc[k]) for k in range(len(arc) - 1))
            best = max(best, L / abs(z[j] - z[i]))
    return best


def principal_root(w, d):
    return cmath.exp(cmath.log(w) / d) if w != 0 else 0j
