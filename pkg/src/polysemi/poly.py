"""Complex polynomials: evaluation, composition, roots and the escape radius.

Coefficients are stored in ascending order, ``coeffs[k]`` multiplying ``z**k``.
Root finding uses the Aberth-Ehrlich simultaneous iteration (all roots at once,
no deflation), vectorized over batches so that preimages of many points can be
computed in one call.
"""

from __future__ import annotations

import math
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

DEGREE_CAP = 4096
DEFAULT_TOL = 1e-12
DEFAULT_SWEEPS = 500


class PolyError(Exception):
    pass


class DegreeOverflow(PolyError):
    def __init__(self, degree: int, cap: int):
        super().__init__(f"composed degree {degree} exceeds cap {cap}; evaluate the word pointwise")
        self.degree = degree
        self.cap = cap


class NoConvergence(PolyError):
    def __init__(self, iterations: int):
        super().__init__(f"root iteration did not converge after {iterations} sweeps")
        self.iterations = iterations


def _horner(c: np.ndarray, z):
    out = np.full(np.shape(z), c[-1], dtype=complex)
    for a in c[-2::-1]:
        out = out * z + a
    return out


class Polynomial:
    """Immutable polynomial with complex coefficients, degree >= 1."""

    def __init__(self, coeffs: Iterable):
        c = np.array(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs, dtype=complex).ravel()
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        nz = np.flatnonzero(c)
        if nz.size == 0 or nz[-1] < 1:
            raise ValueError("polynomial must have degree >= 1")
        c = c[: nz[-1] + 1].copy()
        c.setflags(write=False)
        self._c = c

    @classmethod
    def centered_power(cls, a: complex, b: complex, d: int) -> "Polynomial":
        """The map ``a (z - b)**d + b``."""
        if d < 1:
            raise ValueError("d must be >= 1")
        c = np.array([math.comb(d, k) * (-b) ** (d - k) for k in range(d + 1)], dtype=complex) * a
        c[0] += b
        return cls(c)

    @classmethod
    def from_roots(cls, roots: Sequence[complex], lead: complex = 1.0) -> "Polynomial":
        c = np.array([lead], dtype=complex)
        for r in roots:
            c = np.convolve(c, [1.0, -r])
        return cls(c[::-1])

    @classmethod
    def from_pairs(cls, pairs: Sequence[Sequence[float]]) -> "Polynomial":
        return cls([complex(re, im) for re, im in pairs])

    def to_pairs(self) -> list[list[float]]:
        return [[float(a.real), float(a.imag)] for a in self._c]

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def degree(self) -> int:
        return len(self._c) - 1

    @property
    def leading(self) -> complex:
        return complex(self._c[-1])

    @cached_property
    def dcoeffs(self) -> np.ndarray:
        d = self._c[1:] * np.arange(1, len(self._c))
        d.setflags(write=False)
        return d

    def __call__(self, z):
        if np.isscalar(z):
            return complex(_horner(self._c, complex(z)))
        return _horner(self._c, np.asarray(z, dtype=complex))

    def deriv(self, z):
        if np.isscalar(z):
            return complex(_horner(self.dcoeffs, complex(z)))
        return _horner(self.dcoeffs, np.asarray(z, dtype=complex))

    def derivative(self) -> "Polynomial":
        return Polynomial(self.dcoeffs)

    @cached_property
    def binomial_form(self) -> tuple[complex, complex, complex] | None:
        """(a, c, e) when the map equals ``a (z - c)**d + e``, else None."""
        d = self.degree
        a = self._c[-1]
        c = -self._c[-2] / (d * a)
        shifted = compose(self, Polynomial([c, 1.0]), cap=max(DEGREE_CAP, d))._c
        middle = shifted[1:-1]
        scale = np.abs(shifted).max()
        if middle.size and np.abs(middle).max() > 1e-13 * scale:
            return None
        return complex(a), complex(c), complex(shifted[0])

    def __eq__(self, other) -> bool:
        return isinstance(other, Polynomial) and np.array_equal(self._c, other._c)

    def __hash__(self) -> int:
        return hash(self._c.tobytes())

    def __repr__(self) -> str:
        terms = []
        for k, a in enumerate(self._c):
            if a == 0:
                continue
            coef = f"{a.real:g}" if a.imag == 0 else f"({a.real:g}{a.imag:+g}j)"
            terms.append(coef if k == 0 else f"{coef}*z" + (f"^{k}" if k > 1 else ""))
        return "Polynomial(" + " + ".join(terms) + ")"


def eval_poly(p: Polynomial, z):
    """Horner value p(z); works on scalars and arrays."""
    return p(z)


def compose(outer: Polynomial, inner: Polynomial, cap: int = DEGREE_CAP) -> Polynomial:
    """Coefficients of ``outer(inner(z))``."""
    degree = outer.degree * inner.degree
    if degree > cap:
        raise DegreeOverflow(degree, cap)
    q = inner.coeffs
    acc = np.array([outer.coeffs[-1]], dtype=complex)
    for a in outer.coeffs[-2::-1]:
        acc = np.convolve(acc, q)
        acc[0] += a
    return Polynomial(acc)


def _aberth(C: np.ndarray, tol: float, max_sweeps: int) -> np.ndarray:
    """All roots of each row of ``C`` (ascending coefficients, nonzero leading)."""
    m, n1 = C.shape
    d = n1 - 1
    A = C / C[:, -1:]
    if d == 1:
        return -A[:, :1].copy()
    Ad = A[:, 1:] * np.arange(1, n1)
    absA = np.abs(A)

    def horner(coef, Z):
        out = np.repeat(coef[:, -1:], Z.shape[1], axis=1)
        for k in range(coef.shape[1] - 2, -1, -1):
            out = out * Z + coef[:, k : k + 1]
        return out

    center = -A[:, d - 1] / d
    rho = np.abs(horner(A, center[:, None])[:, 0]) ** (1.0 / d)
    rho = np.where(rho > 0, rho, 1e-3)
    angles = 2 * np.pi * np.arange(d) / d + 0.7
    Z = center[:, None] + rho[:, None] * np.exp(1j * angles)[None, :]
    active = np.ones(m, dtype=bool)
    eye = np.eye(d, dtype=bool)
    for _ in range(max_sweeps):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Za = Z[idx]
        P = horner(A[idx], Za)
        scale = horner(absA[idx].astype(complex), np.maximum(1.0, np.abs(Za)).astype(complex)).real
        done = np.all(np.abs(P) <= tol * scale, axis=1)
        Pd = horner(Ad[idx], Za)
        Pd = np.where(Pd == 0, 1e-300, Pd)
        N = P / Pd
        diff = Za[:, :, None] - Za[:, None, :]
        diff[:, eye] = np.inf
        S = (1.0 / diff).sum(axis=2)
        W = N / (1.0 - N * S)
        W = np.where(np.isfinite(W), W, 0)
        # one last correction for rows that just converged, then freeze them
        Z[idx] = Za - W
        active[idx[done]] = False
    else:
        if active.any():
            raise NoConvergence(max_sweeps)
    if active.any():
        raise NoConvergence(max_sweeps)
    return Z


def _cluster(z: np.ndarray, mono: np.ndarray, tol: float) -> list[tuple[complex, int]]:
    """Merge approximations that share an inclusion disk into multiple roots."""
    d = len(z)
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, 1.0)
    weier = _horner(mono, z) / np.prod(diff, axis=1)
    radius = np.maximum(10 * tol * np.maximum(1.0, np.abs(z)), d * np.abs(weier))
    parent = list(range(d))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    dist = np.abs(z[:, None] - z[None, :])
    for i in range(d):
        for j in range(i + 1, d):
            if dist[i, j] <= radius[i] + radius[j]:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(d):
        groups.setdefault(find(i), []).append(i)
    out = [(complex(z[g].mean()), len(g)) for g in groups.values()]
    out.sort(key=lambda t: (round(t[0].real, 10), round(t[0].imag, 10)))
    return out


def roots(p: Polynomial, tol: float = DEFAULT_TOL, max_sweeps: int = DEFAULT_SWEEPS) -> list[tuple[complex, int]]:
    """All roots of ``p`` with multiplicities."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    z = _aberth(p.coeffs[None, :], tol, max_sweeps)[0]
    return _cluster(z, p.coeffs / p.coeffs[-1], tol)


def critical_points(p: Polynomial, tol: float = DEFAULT_TOL) -> list[tuple[complex, int]]:
    if p.degree < 2:
        return []
    return roots(p.derivative(), tol)


def _dedupe(values: Iterable[complex], tol: float) -> list[complex]:
    out: list[complex] = []
    for v in values:
        if all(abs(v - u) > tol * max(1.0, abs(u)) for u in out):
            out.append(v)
    out.sort(key=lambda t: (round(t.real, 10), round(t.imag, 10)))
    return out


def critical_values_finite(p: Polynomial, tol: float = 1e-9) -> list[complex]:
    """CV*(p): images of the finite critical points, deduplicated."""
    if p.degree < 2:
        raise ValueError("degree must be >= 2")
    return _dedupe((p(c) for c, _ in critical_points(p)), tol)


def repelling_fixed_points(p: Polynomial, eps: float = 1e-6, tol: float = DEFAULT_TOL) -> list[tuple[complex, complex]]:
    """Fixed points with |p'| > 1 + eps, strongest multiplier first."""
    if p.degree < 2:
        raise ValueError("degree must be >= 2")
    c = p.coeffs.copy()
    c[1] -= 1.0
    out = []
    for z, _ in roots(Polynomial(c), tol):
        m = p.deriv(z)
        if abs(m) > 1 + eps:
            out.append((z, m))
    out.sort(key=lambda t: (-round(abs(t[1]), 9), round(t[0].real, 10), round(t[0].imag, 10)))
    return out


def escape_radius(p: Polynomial) -> float:
    """R with |z| >= R implying |p(z)| >= 2|z|."""
    if p.degree < 2:
        raise ValueError("degree must be >= 2")
    c = np.abs(p.coeffs)
    return max(1.0, 2.0 * (1.0 + c[:-1].sum()) / c[-1])


def uniform_escape_radius(gens) -> float:
    polys = getattr(gens, "gens", gens)
    return max(escape_radius(p) for p in polys)


def preimages_batch(p: Polynomial, w, tol: float = DEFAULT_TOL, max_sweeps: int = DEFAULT_SWEEPS) -> np.ndarray:
    """All ``d`` solutions of p(z) = w for each entry of ``w``; shape (len(w), d)."""
    w = np.atleast_1d(np.asarray(w, dtype=complex)).ravel()
    d = p.degree
    bf = p.binomial_form
    if bf is not None:
        a, c, e = bf
        t = (w - e) / a
        base = np.abs(t) ** (1.0 / d) * np.exp(1j * np.angle(t) / d)
        omega = np.exp(2j * np.pi * np.arange(d) / d)
        return c + base[:, None] * omega[None, :]
    C = np.repeat(p.coeffs[None, :], len(w), axis=0)
    C[:, 0] -= w
    return _aberth(C, tol, max_sweeps)


def preimages(p: Polynomial, w: complex, tol: float = DEFAULT_TOL) -> list[complex]:
    """Roots of p(z) - w, repeated by multiplicity."""
    if p.degree < 2:
        raise ValueError("degree must be >= 2")
    c = p.coeffs.copy()
    c[0] -= w
    out = []
    for z, m in roots(Polynomial(c), tol):
        out.extend([z] * m)
    return out
