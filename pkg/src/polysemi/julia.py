"""Julia sets of semigroups and of fibers.

J(G) is sampled by backward orbits (the reference method).  Fiber sets
K_gamma / J_gamma are rasterized by escape time along a realized prefix of the
sequence.  Everything is data parallel and the results do not depend on the
number of worker threads: work is split into fixed blocks and reassembled in
block order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .poly import preimages_batch, repelling_fixed_points
from .raster import EIGHT, FOUR, GridSpec, Raster, four_adjacent
from .semigroup import GeneratorSet, SequenceSpec, Word, median_spacing, realize_prefix

BLOCK_ROWS = 32
CHAIN_BLOCK = 128


class JuliaError(Exception):
    pass


class NoRepellingSeed(JuliaError):
    pass


class EmptyResult(JuliaError):
    pass


class NotEscaped(JuliaError):
    pass


class RayStalled(JuliaError):
    pass


class AmbiguousTopology(JuliaError):
    pass


@dataclass
class PointCloud:
    points: np.ndarray
    provenance: str

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex).ravel()

    def __len__(self) -> int:
        return self.points.size

    def xy(self) -> np.ndarray:
        return np.column_stack([self.points.real, self.points.imag])

    def write_csv(self, path: str | Path) -> None:
        write_cloud_csv(self.points, path)


def write_cloud_csv(points, path: str | Path) -> None:
    """One ``re,im`` line per point, full round-trip precision."""
    pts = np.asarray(points, dtype=complex).ravel()
    lines = [f"{repr(float(z.real))},{repr(float(z.imag))}" for z in pts]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_cloud_csv(path: str | Path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    return data[:, 0] + 1j * data[:, 1]


def _as_points(a) -> np.ndarray:
    return np.asarray(getattr(a, "points", a), dtype=complex).ravel()


def _map_blocks(fn, blocks, threads: int):
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, blocks))
    return [fn(b) for b in blocks]


# --------------------------------------------------------------------------
# backward orbits


def _chain_block(gens: GeneratorSet, start: complex, k: int, steps: int, burn_in: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    m = len(gens)
    Z = np.full(k, start, dtype=complex)
    out = np.empty((steps, k), dtype=complex)
    for t in range(burn_in + steps):
        g = rng.integers(0, m, size=k)
        u = rng.random(k)
        for i in range(m):
            sel = np.flatnonzero(g == i)
            if sel.size == 0:
                continue
            p = gens[i]
            roots = preimages_batch(p, Z[sel])
            branch = np.minimum((u[sel] * p.degree).astype(np.int64), p.degree - 1)
            Z[sel] = roots[np.arange(sel.size), branch]
        if t >= burn_in:
            out[t - burn_in] = Z
    return out


def backward_orbit_sample(gens: GeneratorSet, n_points: int, seed: int, burn_in: int = 20,
                          chains: int = 512, threads: int = 1) -> PointCloud:
    """Random inverse iteration from a repelling fixed point of the first generator.

    Many independent chains run side by side; each step draws a generator and a
    preimage branch uniformly.  Chains are grouped in blocks with their own
    spawned seeds, so the output is fixed by ``seed`` alone.
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    fixed = repelling_fixed_points(gens[0])
    if not fixed:
        raise NoRepellingSeed(f"{gens[0]} has no repelling fixed point")
    start = fixed[0][0]
    n_chains = min(chains, n_points)
    steps = -(-n_points // n_chains)
    sizes = [min(CHAIN_BLOCK, n_chains - s) for s in range(0, n_chains, CHAIN_BLOCK)]
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    parts = _map_blocks(lambda a: _chain_block(gens, start, a[0], steps, burn_in, a[1]),
                        list(zip(sizes, seeds)), threads)
    pts = np.hstack(parts).ravel()[:n_points]
    return PointCloud(pts, "BackwardOrbit")


# --------------------------------------------------------------------------
# fiber rasters


def escape_times(gens: GeneratorSet, word: Word, z, R: float | None = None) -> np.ndarray:
    """First step k with |f_k(z)| > R along the word, or -1."""
    R = gens.R if R is None else R
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    z = z.ravel().copy()
    out = np.full(z.size, -1, dtype=np.int32)
    idx = np.arange(z.size)
    esc = np.abs(z) > R
    out[esc] = 0
    z, idx = z[~esc], idx[~esc]
    for k, i in enumerate(word.indices, start=1):
        if idx.size == 0:
            break
        z = gens[i - 1](z)
        esc = np.abs(z) > R
        if esc.any():
            out[idx[esc]] = k
            keep = ~esc
            z, idx = z[keep], idx[keep]
    return out.reshape(shape)


def fiber_sampler(gens: GeneratorSet, word: Word) -> Callable[[np.ndarray], np.ndarray]:
    R = gens.R
    return lambda z: escape_times(gens, word, z, R) < 0


def fiber_raster(gens: GeneratorSet, spec: SequenceSpec, grid: GridSpec, max_iter: int = 64,
                 threads: int = 1) -> Raster:
    """Escape-time raster of K_gamma along the first ``max_iter`` symbols."""
    word = realize_prefix(spec, max_iter)
    word.check(gens)
    res = grid.resolution
    blocks = [slice(r, min(r + BLOCK_ROWS, res)) for r in range(0, res, BLOCK_ROWS)]
    parts = _map_blocks(lambda rows: escape_times(gens, word, grid.centers(rows)), blocks, threads)
    esc = np.vstack(parts)
    return Raster(grid, esc, gens.R, max_iter, meta={"kind": "fiber", "word": list(word.indices)},
                  sampler=fiber_sampler(gens, word))


def filled_radius(gens: GeneratorSet) -> float:
    """Radius of a disk containing every fiber filled Julia set.

    Pulls the circle |z| = R back through all generators until the bound
    stops shrinking; the result bounds K_gamma for every sequence.
    """
    r = gens.R
    for _ in range(60):
        w = r * np.exp(2j * np.pi * np.arange(256) / 256)
        nxt = max(float(np.abs(preimages_batch(p, w)).max()) for p in gens)
        nxt = max(nxt, 1e-12)
        if nxt >= r * (1 - 1e-9):
            break
        r = nxt
    return r


def boundary_cloud(r: Raster, steps: int = 3) -> PointCloud:
    """Points on J_gamma from Boundary cells, refined by bisection toward the escaped neighbour."""
    b = r.bounded
    e = r.escaped
    pairs = []
    rows, cols = np.nonzero(b[:, :-1] & e[:, 1:])
    pairs.append((rows, cols, rows, cols + 1))
    rows, cols = np.nonzero(e[:, :-1] & b[:, 1:])
    pairs.append((rows, cols + 1, rows, cols))
    rows, cols = np.nonzero(b[:-1, :] & e[1:, :])
    pairs.append((rows, cols, rows + 1, cols))
    rows, cols = np.nonzero(e[:-1, :] & b[1:, :])
    pairs.append((rows + 1, cols, rows, cols))
    inner = np.concatenate([r.grid.point(p[0], p[1]) for p in pairs])
    outer = np.concatenate([r.grid.point(p[2], p[3]) for p in pairs])
    if r.sampler is not None:
        for _ in range(steps):
            mid = 0.5 * (inner + outer)
            ok = r.sampler(mid)
            inner = np.where(ok, mid, inner)
            outer = np.where(ok, outer, mid)
    return PointCloud(0.5 * (inner + outer), "RasterBoundary")


# --------------------------------------------------------------------------
# nested preimages


def _thin(points: np.ndarray, spacing: float) -> np.ndarray:
    """Keep the first point in each cell of a square net; order preserved."""
    if points.size == 0 or spacing <= 0:
        return points
    keys = np.stack([np.floor(points.real / spacing), np.floor(points.imag / spacing)], axis=1).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    first.sort()
    return points[first]


def _thin_to(points: np.ndarray, cap: int, spacing: float) -> np.ndarray:
    pts = _thin(points, spacing)
    while pts.size > cap:
        spacing *= 1.5
        pts = _thin(points, spacing)
    return pts


def hat_fiber_julia(gens: GeneratorSet, prefix: Word, jg_sample, depth: int, max_points: int = 60000) -> PointCloud:
    """Depth-stage approximation of the nested preimage of J(G) along the prefix.

    Stage j pulls the J(G) sample back through gamma_j, ..., gamma_1; points are
    kept only when within twice the previous stage's nearest-neighbour spacing
    of the previous stage, since the stages are nested.
    """
    pts0 = _as_points(jg_sample)
    if depth == 0:
        return PointCloud(pts0.copy(), "PullbackChain")
    if depth > len(prefix):
        raise ValueError("depth exceeds prefix length")
    prefix.check(gens)
    base = median_spacing(pts0)
    prev = pts0
    for j in range(1, depth + 1):
        pts = pts0
        for k in range(j, 0, -1):
            pts = preimages_batch(gens[prefix.indices[k - 1] - 1], pts).ravel()
            pts = _thin_to(pts, max_points, base / 4)
        tol = 2.0 * median_spacing(prev)
        tree = cKDTree(np.column_stack([prev.real, prev.imag]))
        dist, _ = tree.query(np.column_stack([pts.real, pts.imag]))
        pts = pts[dist <= tol]
        if pts.size == 0:
            raise EmptyResult(f"stage {j}: every pulled-back point was filtered")
        prev = pts
    return PointCloud(prev, "PullbackChain")


# --------------------------------------------------------------------------
# Green function and external rays


_BIG = 1e100


def _potential(gens: GeneratorSet, word: Word, z: complex):
    """(G, grad G as a complex number) at z, or None when z does not escape."""
    R = gens.R
    f = complex(z)
    w = 1.0 + 0j  # f_k' / f_k
    if f == 0:
        return None
    w = 1.0 / f
    L = math.log(abs(f))
    D = 1.0
    escaped = abs(f) > R
    large = False
    for i in word.indices:
        p = gens[i - 1]
        d = p.degree
        if not large:
            fn = p(f)
            if fn == 0:
                return None
            w = p.deriv(f) * (w * f) / fn
            f = fn
            L = math.log(abs(f))
            if abs(f) > R:
                escaped = True
            if abs(f) > _BIG:
                large = True
        else:
            L = math.log(abs(p.leading)) + d * L
            w = w * d
        D *= d
    if not escaped:
        return None
    G = L / D
    grad = np.conj(w / D)
    return G, complex(grad)


def green_value(gens: GeneratorSet, spec: SequenceSpec, z: complex, n: int) -> float:
    """(1 / (d_1 ... d_n)) log |f_{gamma,n}(z)|, overflow-safe."""
    word = realize_prefix(spec, n)
    word.check(gens)
    out = _potential(gens, word, z)
    if out is None:
        raise NotEscaped(f"{z} did not escape within {n} steps")
    return out[0]


@dataclass
class RayTrace:
    points: np.ndarray
    landed: bool
    landing: complex | None
    green: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))


def external_ray(gens: GeneratorSet, spec: SequenceSpec, theta: float, steps: int = 2000,
                 n: int = 48, tol: float = 1e-9, g_min: float = 1e-10) -> RayTrace:
    """Follow the gradient of the Green function down from near infinity.

    ``theta`` is in turns (0 <= theta < 1).  The start point is placed on the
    Boettcher normalisation of the fibre: arg phi(z) ~ arg z + sum arg(a_k)/D_k.
    """
    word = realize_prefix(spec, n)
    word.check(gens)
    phase = 0.0
    D = 1.0
    for i in word.indices:
        p = gens[i - 1]
        D *= p.degree
        phase += np.angle(p.leading) / D
    z = 4.0 * max(gens.R, 1.0) * np.exp(1j * (2 * np.pi * theta - phase))
    pot = _potential(gens, word, z)
    if pot is None:
        raise NotEscaped("ray start point did not escape")
    pts = [z]
    greens = [pot[0]]
    landed = False
    frac = 0.25
    for _ in range(steps):
        G, grad = pot
        g2 = abs(grad) ** 2
        if g2 == 0:
            raise RayStalled("vanishing gradient")
        halvings = 0
        while True:
            cand = z - frac * G * grad / g2
            nxt = _potential(gens, word, cand)
            if nxt is not None and nxt[0] < G:
                break
            frac *= 0.5
            halvings += 1
            if halvings > 60:
                raise RayStalled(f"step underflow at {z}")
        move = abs(cand - z)
        z, pot = cand, nxt
        pts.append(z)
        greens.append(pot[0])
        frac = min(0.25, frac * 2)
        if move < tol * max(1.0, abs(z)) or pot[0] < g_min:
            landed = True
            break
    return RayTrace(np.array(pts), landed, complex(z) if landed else None, np.array(greens))


# --------------------------------------------------------------------------
# components, surrounding order, distances


@dataclass
class ComponentSet:
    labels: np.ndarray
    count: int
    representatives: list[tuple[int, int]]
    tag_class: str

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels.ravel(), minlength=self.count + 1)[1:]


def tag_mask(r: Raster, tag_class: str) -> np.ndarray:
    masks = {
        "escaped": lambda: r.escaped,
        "bounded": lambda: r.bounded,
        "interior": lambda: r.interior,
        "boundary": lambda: r.boundary,
    }
    if tag_class not in masks:
        raise ValueError(f"unknown tag class {tag_class!r}")
    return masks[tag_class]()


def label_mask(mask: np.ndarray, tag_class: str = "mask", connectivity: int = 4) -> ComponentSet:
    labels, count = ndimage.label(mask, structure=FOUR if connectivity == 4 else EIGHT)
    reps = []
    if count:
        flat = labels.ravel()
        nz = np.flatnonzero(flat)
        lab = flat[nz]
        _, first = np.unique(lab, return_index=True)
        w = mask.shape[1]
        reps = [(int(nz[i] // w), int(nz[i] % w)) for i in first]
    return ComponentSet(labels, int(count), reps, tag_class)


def components(r: Raster, tag_class: str = "bounded") -> ComponentSet:
    """4-connected labeling of the cells in a tag class."""
    return label_mask(tag_mask(r, tag_class), tag_class)


def hausdorff_distance(a, b) -> float:
    pa, pb = _as_points(a), _as_points(b)
    if pa.size == 0 or pb.size == 0:
        raise ValueError("point clouds must be nonempty")
    xa = np.column_stack([pa.real, pa.imag])
    xb = np.column_stack([pb.real, pb.imag])
    d1, _ = cKDTree(xb).query(xa)
    d2, _ = cKDTree(xa).query(xb)
    return float(max(d1.max(), d2.max()))


def min_distance(a, b) -> float:
    pa, pb = _as_points(a), _as_points(b)
    d, _ = cKDTree(np.column_stack([pb.real, pb.imag])).query(np.column_stack([pa.real, pa.imag]))
    return float(d.min())


def self_similarity_residual(gens: GeneratorSet, jg) -> float:
    """Hausdorff distance between a J(G) sample and its union of preimages."""
    pts = _as_points(jg)
    if pts.size == 0:
        raise ValueError("empty sample")
    pre = np.concatenate([preimages_batch(p, pts).ravel() for p in gens])
    return hausdorff_distance(pts, pre)


@dataclass
class Surrounding:
    relation: str
    min_distance: float
    tolerance: float


def _enclosure(points: np.ndarray, lo: complex, h: float, shape: tuple[int, int]):
    """Label the complement of a rasterized cloud; label of the unbounded part."""
    col = np.floor((points.real - lo.real) / h).astype(np.int64)
    row = np.floor((points.imag - lo.imag) / h).astype(np.int64)
    wall = np.zeros(shape, dtype=bool)
    wall[row, col] = True
    wall = ndimage.binary_dilation(wall, structure=EIGHT)
    labels, _ = ndimage.label(~wall, structure=FOUR)
    frame = np.unique(np.concatenate([labels[0], labels[-1], labels[:, 0], labels[:, -1]]))
    frame = frame[frame > 0]
    return wall, labels, frame


def surrounding_compare(a, b, tol: float | None = None, max_res: int = 2048) -> Surrounding:
    """Surrounding order between two boundary clouds.

    Each cloud is rasterized at roughly its sampling spacing and thickened by
    one cell; a cloud surrounds the other when every point of the other lies in
    a bounded complementary component of the thickened raster.
    """
    pa, pb = _as_points(a), _as_points(b)
    if pa.size == 0 or pb.size == 0:
        raise ValueError("both clouds must be nonempty")
    if tol is None:
        tol = 2.0 * max(median_spacing(pa), median_spacing(pb))
    dmin = min_distance(pa, pb)
    if dmin < tol:
        return Surrounding("Overlap", dmin, tol)
    allp = np.concatenate([pa, pb])
    lo = complex(allp.real.min(), allp.imag.min())
    hi = complex(allp.real.max(), allp.imag.max())
    span = max(hi.real - lo.real, hi.imag - lo.imag)
    sp = max(median_spacing(pa), median_spacing(pb))
    h = max(min(dmin / 3.0, sp), span / max_res, 1e-300)
    lo = lo - 4 * h * (1 + 1j)
    n = int(math.ceil(span / h)) + 9
    shape = (n, n)

    def inside(cloud, other) -> bool | None:
        wall, labels, frame = _enclosure(cloud, lo, h, shape)
        if labels.max() == len(frame):
            return None  # cloud encloses nothing
        col = np.floor((other.real - lo.real) / h).astype(np.int64)
        row = np.floor((other.imag - lo.imag) / h).astype(np.int64)
        lab = labels[row, col]
        lab = lab[lab > 0]
        if lab.size == 0:
            return False
        return bool(np.all(~np.isin(lab, frame)))

    a_in_b = inside(pb, pa)
    b_in_a = inside(pa, pb)
    if a_in_b is None and b_in_a is None:
        raise AmbiguousTopology("neither cloud closes up into a curve at the working resolution")
    if a_in_b:
        return Surrounding("Less", dmin, tol)
    if b_in_a:
        return Surrounding("Greater", dmin, tol)
    return Surrounding("Disjoint-incomparable", dmin, tol)


# --------------------------------------------------------------------------
# grid heuristic for J(G)


def heuristic_julia_raster(gens: GeneratorSet, grid: GridSpec, depth: int = 6, threads: int = 1) -> np.ndarray:
    """Cells crossed by the boundary of some depth-``depth`` word's escape region.

    A cell is flagged when, for some word of length ``depth``, it stays bounded
    while a 4-neighbour escapes.  This is the visual escape-disparity picture of
    J(G); it has no convergence guarantee and is only cross-checked against the
    backward-orbit sample.
    """
    res = grid.resolution
    R = gens.R
    m = len(gens)
    Z0 = grid.centers().ravel()
    mask = np.zeros(res * res, dtype=bool)

    def walk(idx: np.ndarray, Z: np.ndarray, level: int, found: np.ndarray):
        if level == depth:
            bounded = np.zeros(res * res, dtype=bool)
            bounded[idx] = True
            b2 = bounded.reshape(res, res)
            found |= (b2 & four_adjacent(~b2)).ravel()
            return
        for g in range(m):
            W = gens[g](Z)
            keep = np.abs(W) <= R
            if keep.any():
                walk(idx[keep], W[keep], level + 1, found)

    def run(g0):
        found = np.zeros(res * res, dtype=bool)
        W = gens[g0](Z0)
        keep = np.abs(W) <= R
        if depth == 1:
            b2 = keep.reshape(res, res)
            found |= (b2 & four_adjacent(~b2)).ravel()
        elif keep.any():
            walk(np.flatnonzero(keep), W[keep], 1, found)
        return found

    for part in _map_blocks(run, list(range(m)), threads):
        mask |= part
    return mask.reshape(res, res)
