"""Generator families, words, sequences and postcritical analysis.

A word ``(i1, ..., in)`` is applied first to last, so it stands for the map
``h_in o ... o h_i1``.  Indices are 1-based, as in the mathematical notation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np
from scipy.spatial import cKDTree

from .poly import Polynomial, critical_values_finite, uniform_escape_radius
from .raster import GridSpec, Raster


class BudgetExceeded(Exception):
    def __init__(self, count: int, cap: int):
        super().__init__(f"word tree grew to {count} nodes in one cell (cap {cap})")
        self.count = count
        self.cap = cap


@dataclass(frozen=True)
class GeneratorSet:
    gens: tuple[Polynomial, ...]
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        gens = tuple(self.gens)
        object.__setattr__(self, "gens", gens)
        if not gens:
            raise ValueError("generator set is empty")
        for p in gens:
            if not isinstance(p, Polynomial):
                raise TypeError("generators must be Polynomial instances")
            if p.degree < 2:
                raise ValueError(f"generator {p} has degree < 2")
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if len(w) != len(gens):
                raise ValueError("weights length differs from generator count")
            if min(w) <= 0 or abs(sum(w) - 1.0) > 1e-9:
                raise ValueError("weights must be positive and sum to 1")
            object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return len(self.gens)

    def __iter__(self):
        return iter(self.gens)

    def __getitem__(self, k: int) -> Polynomial:
        return self.gens[k]

    @cached_property
    def R(self) -> float:
        return uniform_escape_radius(self.gens)

    @property
    def probabilities(self) -> tuple[float, ...]:
        return self.weights if self.weights is not None else tuple([1.0 / len(self.gens)] * len(self.gens))

    def with_generator(self, p: Polynomial) -> "GeneratorSet":
        return GeneratorSet(self.gens + (p,), None)

    def to_json(self) -> dict:
        out = {"generators": [p.to_pairs() for p in self.gens]}
        if self.weights is not None:
            out["weights"] = list(self.weights)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "GeneratorSet":
        gens = tuple(Polynomial.from_pairs(c) for c in obj["generators"])
        w = obj.get("weights")
        return cls(gens, tuple(w) if w is not None else None)


@dataclass(frozen=True)
class Word:
    indices: tuple[int, ...] = ()

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(i < 1 for i in idx):
            raise ValueError("word indices are 1-based")
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def check(self, gens: GeneratorSet) -> None:
        if any(i > len(gens) for i in self.indices):
            raise ValueError(f"word {self.indices} uses an index beyond {len(gens)} generators")

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self.indices)) + ")"


@dataclass(frozen=True)
class Periodic:
    word: Word

    def __post_init__(self):
        if not isinstance(self.word, Word):
            object.__setattr__(self, "word", Word(tuple(self.word)))
        if len(self.word) == 0:
            raise ValueError("periodic word must be nonempty")


@dataclass(frozen=True)
class Prefix:
    word: Word
    tail: "SequenceSpec"

    def __post_init__(self):
        if not isinstance(self.word, Word):
            object.__setattr__(self, "word", Word(tuple(self.word)))


@dataclass(frozen=True)
class IID:
    weights: tuple[float, ...]
    seed: int
    offset: int = 0

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if not w or min(w) <= 0 or abs(sum(w) - 1.0) > 1e-9:
            raise ValueError("IID weights must be positive and sum to 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "seed", int(self.seed))


SequenceSpec = Union[Periodic, Prefix, IID]


def realize_prefix(spec: SequenceSpec, n: int) -> Word:
    """The first ``n`` symbols of the sequence, independent of call history."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if isinstance(spec, Periodic):
        w = spec.word.indices
        return Word(tuple(w[k % len(w)] for k in range(n)))
    if isinstance(spec, Prefix):
        head = spec.word.indices[:n]
        rest = realize_prefix(spec.tail, n - len(head)).indices if n > len(head) else ()
        return Word(head + rest)
    if isinstance(spec, IID):
        # a fresh generator per call; numpy streams are prefix consistent
        rng = np.random.default_rng(spec.seed)
        u = rng.random(spec.offset + n)[spec.offset :]
        cdf = np.cumsum(spec.weights)
        cdf[-1] = 1.0
        idx = np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1) + 1
        return Word(tuple(int(i) for i in idx))
    raise TypeError(f"unknown sequence spec {spec!r}")


def shift(spec: SequenceSpec, k: int = 1) -> SequenceSpec:
    """sigma^k of the sequence."""
    if k <= 0:
        return spec
    if isinstance(spec, Periodic):
        w = spec.word.indices
        k %= len(w)
        return Periodic(Word(w[k:] + w[:k]))
    if isinstance(spec, Prefix):
        if k < len(spec.word):
            return Prefix(Word(spec.word.indices[k:]), spec.tail)
        return shift(spec.tail, k - len(spec.word))
    if isinstance(spec, IID):
        return IID(spec.weights, spec.seed, spec.offset + k)
    raise TypeError(f"unknown sequence spec {spec!r}")


def spec_id(spec: SequenceSpec) -> str:
    if isinstance(spec, Periodic):
        return "Periodic" + str(spec.word)
    if isinstance(spec, Prefix):
        return "Prefix" + str(spec.word) + "+" + spec_id(spec.tail)
    if isinstance(spec, IID):
        base = f"IID(seed={spec.seed})"
        return base if spec.offset == 0 else base + f">>{spec.offset}"
    raise TypeError(f"unknown sequence spec {spec!r}")


def spec_to_json(spec: SequenceSpec) -> dict:
    if isinstance(spec, Periodic):
        return {"kind": "periodic", "word": list(spec.word.indices)}
    if isinstance(spec, Prefix):
        return {"kind": "prefix", "word": list(spec.word.indices), "tail": spec_to_json(spec.tail)}
    return {"kind": "iid", "weights": list(spec.weights), "seed": spec.seed, "offset": spec.offset}


def spec_from_json(obj: dict) -> SequenceSpec:
    kind = obj.get("kind")
    if kind == "periodic":
        return Periodic(Word(tuple(obj["word"])))
    if kind == "prefix":
        return Prefix(Word(tuple(obj["word"])), spec_from_json(obj["tail"]))
    if kind == "iid":
        return IID(tuple(obj["weights"]), int(obj["seed"]), int(obj.get("offset", 0)))
    raise ValueError(f"unknown sequence kind {kind!r}")


def eval_word(gens: GeneratorSet, w: Word, z):
    """h_{i_n}(...h_{i_1}(z)); the empty word is the identity."""
    w.check(gens)
    out = z if np.isscalar(z) else np.asarray(z, dtype=complex).copy()
    for i in w.indices:
        out = gens[i - 1](out)
    return out


@dataclass
class OrbitVerdict:
    status: str
    depth_used: int
    n_points: int
    bound_radius: float | None = None
    witness: Word | None = None
    witness_start: complex | None = None
    witness_value: complex | None = None
    net: np.ndarray = field(default_factory=lambda: np.zeros(0, complex), repr=False)

    def to_json(self) -> dict:
        out = {"status": self.status, "depth_used": self.depth_used, "n_points": self.n_points}
        if self.bound_radius is not None:
            out["bound_radius"] = self.bound_radius
        if self.witness is not None:
            out["witness"] = {
                "word": list(self.witness.indices),
                "start": [self.witness_start.real, self.witness_start.imag],
                "value": [self.witness_value.real, self.witness_value.imag],
            }
        return out


def postcritical_bounded_check(gens: GeneratorSet, depth: int = 64, budget: int = 10**6, net: float = 1e-6) -> OrbitVerdict:
    """Breadth-first forward orbit of CV* under all generators on a net."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    R = gens.R
    start = []
    for p in gens:
        start.extend(critical_values_finite(p))
    pts: list[complex] = []
    parent: list[int] = []
    via: list[int] = []
    seen: set[tuple[int, int]] = set()

    def key(z: complex) -> tuple[int, int]:
        return (math.floor(z.real / net), math.floor(z.imag / net))

    def witness_of(i: int, extra: list[int], value: complex) -> OrbitVerdict:
        word = list(extra)
        while parent[i] >= 0:
            word.append(via[i])
            i = parent[i]
        word.reverse()
        return OrbitVerdict("Escaped", depth_used=len(word), n_points=len(pts),
                            witness=Word(tuple(word)), witness_start=pts[i], witness_value=value)

    for v in start:
        k = key(v)
        if k in seen:
            continue
        seen.add(k)
        pts.append(v)
        parent.append(-1)
        via.append(0)
        if abs(v) > R:
            return witness_of(len(pts) - 1, [], v)
    frontier = np.arange(len(pts))
    for sweep in range(1, depth + 1):
        Z = np.array(pts, dtype=complex)[frontier]
        images = [p(Z) for p in gens]
        for j in range(len(frontier)):
            for g, img in enumerate(images):
                if abs(img[j]) > R:
                    return witness_of(int(frontier[j]), [g + 1], complex(img[j]))
        new = []
        for g, img in enumerate(images):
            kx = np.floor(img.real / net).astype(np.int64)
            ky = np.floor(img.imag / net).astype(np.int64)
            for j in range(len(frontier)):
                k = (int(kx[j]), int(ky[j]))
                if k in seen:
                    continue
                seen.add(k)
                pts.append(complex(img[j]))
                parent.append(int(frontier[j]))
                via.append(g + 1)
                new.append(len(pts) - 1)
        if not new:
            arr = np.array(pts, dtype=complex)
            return OrbitVerdict("Bounded", depth_used=sweep, n_points=len(pts),
                                bound_radius=float(np.abs(arr).max()), net=arr)
        if len(pts) > budget:
            return OrbitVerdict("Inconclusive", depth_used=sweep, n_points=len(pts),
                                net=np.array(pts, dtype=complex))
        frontier = np.array(new)
    return OrbitVerdict("Inconclusive", depth_used=depth, n_points=len(pts), net=np.array(pts, dtype=complex))


def tree_bounded(gens: GeneratorSet, z0, depth: int, node_cap: int = 4096, net: float = 1e-6):
    """For each start point: does every word of length <= depth keep |z| <= R?

    Returns ``(inside, escape_level, max_nodes)``.  Images are deduplicated per
    start point on a net, and a start point stops as soon as one word escapes.
    """
    R = gens.R
    m = len(gens)
    z0 = np.asarray(z0, dtype=complex).ravel()
    n = z0.size
    inside = np.ones(n, dtype=bool)
    level = np.full(n, -1, dtype=np.int32)
    out0 = np.abs(z0) > R
    inside[out0] = False
    level[out0] = 0
    ids = np.flatnonzero(~out0)
    Z = z0[ids]
    max_nodes = 1
    for lev in range(1, depth + 1):
        if ids.size == 0:
            break
        Z = np.concatenate([p(Z) for p in gens])
        ids = np.tile(ids, m)
        esc = np.abs(Z) > R
        if esc.any():
            hit = np.unique(ids[esc])
            inside[hit] = False
            level[hit] = lev
            keep = inside[ids]
            Z, ids = Z[keep], ids[keep]
        if ids.size == 0:
            break
        kx = np.floor(Z.real / net).astype(np.int64)
        ky = np.floor(Z.imag / net).astype(np.int64)
        keys = np.stack([ids.astype(np.int64), kx, ky], axis=1)
        _, first = np.unique(keys, axis=0, return_index=True)
        first.sort()
        Z, ids = Z[first], ids[first]
        counts = np.bincount(ids, minlength=n)
        top = int(counts.max())
        max_nodes = max(max_nodes, top)
        if top > node_cap:
            raise BudgetExceeded(top, node_cap)
    return inside, level, max_nodes


@dataclass
class HyperbolicVerdict:
    status: str
    margin: float | None = None
    witness: complex | None = None
    reason: str = ""

    @property
    def positive(self) -> bool:
        return self.status == "LikelyHyperbolic"

    def to_json(self) -> dict:
        out = {"status": self.status, "reason": self.reason}
        if self.margin is not None:
            out["margin"] = self.margin
        if self.witness is not None:
            out["witness"] = [self.witness.real, self.witness.imag]
        return out


def median_spacing(points: np.ndarray) -> float:
    pts = np.asarray(points, dtype=complex)
    if pts.size < 2:
        return 0.0
    xy = np.column_stack([pts.real, pts.imag])
    d, _ = cKDTree(xy).query(xy, k=2)
    return float(np.median(d[:, 1]))


def hyperbolic_heuristic(gens: GeneratorSet, julia_sample, depth: int = 64, tol: float | None = None,
                         khat_depth: int = 12) -> HyperbolicVerdict:
    """Is the stabilized postcritical net away from J(G) and inside K-hat(G)?"""
    pts = np.asarray(getattr(julia_sample, "points", julia_sample), dtype=complex).ravel()
    if pts.size == 0:
        raise ValueError("julia_sample is empty")
    v = postcritical_bounded_check(gens, depth)
    if v.status != "Bounded":
        return HyperbolicVerdict("Unknown", reason=f"postcritical check {v.status}")
    if tol is None:
        tol = 2.0 * median_spacing(pts)
    tree = cKDTree(np.column_stack([pts.real, pts.imag]))
    dist, _ = tree.query(np.column_stack([v.net.real, v.net.imag]))
    k = int(np.argmin(dist))
    margin = float(dist[k])
    if margin <= tol:
        return HyperbolicVerdict("NotHyperbolic", margin=margin, witness=complex(v.net[k]),
                                 reason="postcritical point on the Julia sample")
    inside, _, _ = tree_bounded(gens, v.net, khat_depth, node_cap=10**6)
    if not inside.all():
        bad = complex(v.net[np.flatnonzero(~inside)[0]])
        return HyperbolicVerdict("NotHyperbolic", margin=margin, witness=bad,
                                 reason="postcritical point outside the K-hat estimate")
    return HyperbolicVerdict("LikelyHyperbolic", margin=margin)


def khat_estimate(gens: GeneratorSet, grid: GridSpec, depth: int = 12, node_cap: int = 4096,
                  dedupe: float | None = None, threads: int = 1) -> Raster:
    """Cells whose whole word tree of length <= depth stays in D(0, R).

    Cells marked bounded approximate K-hat(G) from outside; ``escaped_at`` holds
    the word length at which some word first escaped.  Rows are processed in
    independent blocks, so the result does not depend on ``threads``.
    """
    from concurrent.futures import ThreadPoolExecutor

    net = dedupe if dedupe is not None else grid.cell / 8
    res = grid.resolution
    blocks = [slice(r, min(r + 32, res)) for r in range(0, res, 32)]

    def run(rows):
        inside, level, top = tree_bounded(gens, grid.centers(rows).ravel(), depth, node_cap, net)
        return level.reshape(-1, res), top

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    esc = np.vstack([p[0] for p in parts])
    top = max(p[1] for p in parts)
    return Raster(grid, esc, gens.R, depth, meta={"kind": "khat", "max_words_per_cell": top, "net": net})
