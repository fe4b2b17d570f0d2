"""Empirical trichotomy for postcritically bounded hyperbolic semigroups.

Sampled fibers are sorted into three pictures:

I    every fiber Julia set is a quasicircle with a common constant;
II   typical fibers are Jordan curves that are not quasicircles, and two
     fiber Julia sets are disjoint and nested;
III  every two fiber Julia sets meet.

Finite samples cannot decide this, so each case is a predicate on the samples
with thresholds that are echoed in the report, and conflicting or missing
evidence gives ``Mixed-evidence`` rather than a forced answer.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .geometry import GeometryError, LiftError, fiber_curve, john_estimate, jordan_test, quasicircle_ratio
from .julia import AmbiguousTopology, backward_orbit_sample, boundary_cloud, components, fiber_raster, min_distance
from .julia import surrounding_compare
from .raster import GridSpec
from .semigroup import (IID, GeneratorSet, Periodic, SequenceSpec, Word, hyperbolic_heuristic,
                        postcritical_bounded_check, realize_prefix, spec_id, spec_to_json)

SCHEMA_VERSION = 1


class PreconditionFailed(Exception):
    pass


@dataclass
class Thresholds:
    jordan_fraction: float = 0.9
    divergence: float = 3.0
    divergence_fraction: float = 0.8
    case1_growth: float = 1.25

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ClassificationReport:
    case: str
    sequences: list[dict]
    pairs: list[dict]
    parameters: dict
    reasons: list[str] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "case": self.case,
            "reasons": list(self.reasons),
            "summary": self.summary,
            "parameters": self.parameters,
            "sequences": self.sequences,
            "pairs": self.pairs,
        }


def check_preconditions(gens: GeneratorSet, seed: int = 0, depth: int = 64):
    v = postcritical_bounded_check(gens, depth)
    if v.status != "Bounded":
        raise PreconditionFailed(f"postcritical check returned {v.status}")
    js = backward_orbit_sample(gens, 20000, seed)
    hv = hyperbolic_heuristic(gens, js, depth)
    if not hv.positive:
        raise PreconditionFailed(f"hyperbolic heuristic returned {hv.status}: {hv.reason}")
    return v, hv


def sample_specs(gens: GeneratorSet, n_sequences: int, seed: int) -> list[tuple[str, SequenceSpec]]:
    """All periodic words of length <= 2 (up to rotation), then i.i.d. streams."""
    m = len(gens)
    out: list[tuple[str, SequenceSpec]] = [("periodic", Periodic(Word((i,)))) for i in range(1, m + 1)]
    out += [("periodic", Periodic(Word((i, j)))) for i in range(1, m + 1) for j in range(i + 1, m + 1)]
    seeds = np.random.SeedSequence(seed).generate_state(n_sequences, dtype=np.uint64)
    out += [("iid", IID(gens.probabilities, int(s))) for s in seeds]
    return out


def _relation(cloud_a: np.ndarray, cloud_b: np.ndarray, cell: float) -> dict:
    dmin = min_distance(cloud_a, cloud_b)
    if dmin < 2 * cell:
        return {"relation": "Overlap", "min_distance": dmin, "tolerance": 2 * cell}
    try:
        s = surrounding_compare(cloud_a, cloud_b, tol=2 * cell)
    except AmbiguousTopology as exc:
        return {"relation": "Ambiguous", "min_distance": dmin, "tolerance": 2 * cell, "error": str(exc)}
    rec = {"relation": s.relation, "min_distance": s.min_distance, "tolerance": s.tolerance}
    if s.relation == "Disjoint-incomparable":
        rec["contradiction"] = "disjoint fibers must be nested in the postcritically bounded case"
    return rec


def pairwise_relation(gens: GeneratorSet, spec_a: SequenceSpec, spec_b: SequenceSpec, prefix_len: int,
                      grid: GridSpec) -> dict:
    """Overlap when the boundary clouds come within 2 cells, else the surrounding order."""
    ra = fiber_raster(gens, spec_a, grid, prefix_len)
    rb = fiber_raster(gens, spec_b, grid, prefix_len)
    if not ra.bounded.any() or not rb.bounded.any():
        raise ValueError("fiber raster has an empty bounded region")
    rec = _relation(boundary_cloud(ra).points, boundary_cloud(rb).points, grid.cell)
    rec.update(a=spec_id(spec_a), b=spec_id(spec_b))
    return rec


def john_trend(gens: GeneratorSet, spec: SequenceSpec, prefix_len: int, grid: GridSpec, samples: int,
               seed: int, factor: int = 4) -> dict:
    """John estimates of the basin and the largest bounded component at grid / factor and at grid."""
    coarse = GridSpec(grid.center, grid.half_width, max(16, grid.resolution // factor))
    out = {"resolutions": [coarse.resolution, grid.resolution]}
    for region in ("exterior", "interior"):
        try:
            vals = [john_estimate(fiber_raster(gens, spec, g, prefix_len), region, samples, seed).c_estimate
                    for g in (coarse, grid)]
        except (GeometryError, ValueError) as exc:
            out[region] = {"error": str(exc)}
            continue
        out[region] = {"coarse": vals[0], "fine": vals[1], "ratio": vals[1] / vals[0] if vals[0] > 0 else None}
    return out


def analyze_sequence(gens: GeneratorSet, kind: str, spec: SequenceSpec, prefix_len: int, grid: GridSpec,
                     n_points: int, refine: int, seed: int, john_samples: int = 0) -> tuple[dict, np.ndarray]:
    r = fiber_raster(gens, spec, grid, prefix_len)
    word = realize_prefix(spec, prefix_len)
    jv = jordan_test(r)
    rec = {
        "id": spec_id(spec),
        "kind": kind,
        "spec": spec_to_json(spec),
        "mixed": len(set(word.indices)) > 1,
        "jordan": jv.to_json(),
        "interior_components": components(r, "interior").count,
    }
    try:
        coarse = quasicircle_ratio(fiber_curve(gens, spec, grid, n_points, 1, prefix_len), seed=seed)
        fine = quasicircle_ratio(fiber_curve(gens, spec, grid, n_points, refine, prefix_len), seed=seed)
        rec["ratio"] = {"coarse_points": coarse.n_points, "fine_points": fine.n_points,
                        "coarse_max": coarse.global_max, "fine_max": fine.global_max,
                        "growth": fine.global_max / coarse.global_max}
    except (GeometryError, LiftError, ValueError) as exc:
        rec["ratio"] = {"error": str(exc)}
    if john_samples > 0:
        rec["john"] = john_trend(gens, spec, prefix_len, grid, john_samples, seed)
    cloud = boundary_cloud(r).points if r.bounded.any() else np.zeros(0, complex)
    return rec, cloud


def _decide(seqs: list[dict], pairs: list[dict], th: Thresholds, trapping_ok: bool) -> tuple[str, list[str], dict]:
    iid = [s for s in seqs if s["kind"] == "iid"]
    n_jordan = sum(s["jordan"]["status"] == "Jordan" for s in iid)
    frac = n_jordan / len(iid) if iid else 0.0
    all_jordan = all(s["jordan"]["status"] == "Jordan" for s in seqs)
    with_ratio = [s for s in seqs if "growth" in s["ratio"]]
    coarse = max((s["ratio"]["coarse_max"] for s in with_ratio), default=float("nan"))
    fine = max((s["ratio"]["fine_max"] for s in with_ratio), default=float("nan"))
    growth = fine / coarse if with_ratio else float("nan")
    mixed_j = [s for s in iid if s["mixed"] and s["jordan"]["status"] == "Jordan"]
    diverging = [s for s in mixed_j if s["ratio"].get("growth", 0.0) >= th.divergence]
    div_frac = len(diverging) / len(mixed_j) if mixed_j else 0.0
    ordered = [p for p in pairs if p["relation"] in ("Less", "Greater")]
    disjoint = [p for p in pairs if p["relation"] != "Overlap"]
    summary = {
        "iid_jordan": n_jordan, "iid_total": len(iid), "jordan_fraction": frac,
        "all_jordan": all_jordan, "max_ratio_coarse": coarse, "max_ratio_fine": fine,
        "max_ratio_growth": growth, "mixed_jordan": len(mixed_j), "mixed_diverging": len(diverging),
        "diverging_fraction": div_frac, "ordered_pairs": len(ordered), "disjoint_pairs": len(disjoint),
        "contradictions": sum("contradiction" in p for p in pairs),
    }
    holds = {
        "I": all_jordan and len(with_ratio) == len(seqs) and growth < th.case1_growth,
        "II": frac >= th.jordan_fraction and div_frac >= th.divergence_fraction and bool(ordered),
        "III": (bool(pairs) and not disjoint) or trapping_ok,
    }
    reasons = []
    if not holds["I"]:
        reasons.append(f"I fails: all_jordan={all_jordan}, ratio growth {growth:.3g} (needs < {th.case1_growth})")
    if not holds["II"]:
        reasons.append(f"II fails: jordan fraction {frac:.3g} (>= {th.jordan_fraction}), diverging fraction "
                       f"{div_frac:.3g} (>= {th.divergence_fraction}), ordered pairs {len(ordered)}")
    if not holds["III"]:
        reasons.append(f"III fails: {len(disjoint)} disjoint pairs")
    true = [k for k, v in holds.items() if v]
    if len(true) == 1:
        return true[0], reasons, summary
    if len(true) > 1:
        reasons.append(f"several cases hold: {', '.join(true)}")
    return "Mixed-evidence", reasons, summary


def classify_trichotomy(gens: GeneratorSet, n_sequences: int = 50, prefix_len: int = 20,
                        grid: GridSpec | None = None, seed: int = 0, threads: int = 1, n_points: int = 256,
                        refine: int = 16, n_pairs: int = 10, thresholds: Thresholds | None = None,
                        trapping_certificate=None, check: bool = True, john_samples: int = 0) -> ClassificationReport:
    """Sample fibers, measure them, and aggregate into Case I, II, III or Mixed-evidence.

    Per sequence: the fiber raster, its Jordan verdict, the interior component
    count and the arc-chord ratio at ``n_points`` and ``n_points * refine``
    boundary points.  Pairs: all periodic pairs plus ``n_pairs`` consecutive
    i.i.d. pairs.  With ``john_samples > 0`` each record also carries John
    estimates at a quarter of the resolution and at full resolution; they are
    reported but do not enter the decision.  Jobs run in a thread pool; results are folded in job order.
    """
    th = thresholds or Thresholds()
    if check:
        check_preconditions(gens, seed)
    if grid is None:
        from .julia import filled_radius

        grid = GridSpec(0, 1.0625 * filled_radius(gens), 1024)
    specs = sample_specs(gens, n_sequences, seed)

    def job(item):
        kind, spec = item
        return analyze_sequence(gens, kind, spec, prefix_len, grid, n_points, refine, seed, john_samples)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(job, specs))
    else:
        results = [job(s) for s in specs]
    seqs = [r[0] for r in results]
    clouds = [r[1] for r in results]
    idx_periodic = [i for i, (k, _) in enumerate(specs) if k == "periodic"]
    idx_iid = [i for i, (k, _) in enumerate(specs) if k == "iid"]
    pair_idx = [(a, b) for n, a in enumerate(idx_periodic) for b in idx_periodic[n + 1:]]
    pair_idx += list(zip(idx_iid, idx_iid[1:]))[:n_pairs]

    def pjob(ab):
        a, b = ab
        if clouds[a].size == 0 or clouds[b].size == 0:
            return {"a": seqs[a]["id"], "b": seqs[b]["id"], "relation": "Ambiguous", "error": "empty fiber"}
        rec = _relation(clouds[a], clouds[b], grid.cell)
        return {"a": seqs[a]["id"], "b": seqs[b]["id"], **rec}

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            pairs = list(ex.map(pjob, pair_idx))
    else:
        pairs = [pjob(p) for p in pair_idx]
    trapping_ok = bool(trapping_certificate is not None and trapping_certificate.ok)
    case, reasons, summary = _decide(seqs, pairs, th, trapping_ok)
    params = {"n_sequences": n_sequences, "prefix_len": prefix_len, "grid": grid.to_json(), "seed": seed,
              "n_points": n_points, "refine": refine, "n_pairs": n_pairs, "john_samples": john_samples,
              "thresholds": th.to_json(), "generators": gens.to_json()}
    return ClassificationReport(case, seqs, pairs, params, reasons, summary)
