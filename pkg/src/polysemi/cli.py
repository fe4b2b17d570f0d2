"""Command-line front end.

Every command reads one JSON job document (``--config``) and writes its
outputs into ``--out``.  The schema is described in docs/config.md.

Exit codes: 0 ok, 2 invalid configuration, 3 compute error, 4 negative
scientific verdict (Mixed-evidence classification or a failed certificate).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import classify as cl
from . import construct as co
from . import geometry as geo
from . import julia as ju
from .poly import Polynomial
from .raster import GridSpec, Raster
from .semigroup import GeneratorSet, median_spacing, postcritical_bounded_check, spec_from_json

EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE, EXIT_NEGATIVE = 0, 2, 3, 4


class ConfigError(Exception):
    pass


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _complex(v, what: str) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    raise ConfigError(f"{what}: expected a number or [re, im]")


def _poly(obj, what: str) -> Polynomial:
    if not isinstance(obj, list) or not obj:
        raise ConfigError(f"{what}: expected a list of [re, im] coefficient pairs")
    try:
        return Polynomial([_complex(c, what) for c in obj])
    except ValueError as exc:
        raise ConfigError(f"{what}: {exc}") from exc


class Job:
    """A validated job document."""

    def __init__(self, doc: dict, seed_override: int | None = None):
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        self.doc = doc
        self.seed = int(seed_override if seed_override is not None else doc.get("seed", 0))
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        self._gens = None

    def section(self, name: str) -> dict:
        s = self.doc.get(name, {})
        if not isinstance(s, dict):
            raise ConfigError(f"section {name!r} must be an object")
        return s

    @property
    def gens(self) -> GeneratorSet:
        if self._gens is None:
            raw = self.doc.get("generators")
            if not isinstance(raw, list) or not raw:
                raise ConfigError("generators: need a nonempty list of polynomials")
            polys = tuple(_poly(g, f"generators[{k}]") for k, g in enumerate(raw))
            w = self.doc.get("weights")
            try:
                self._gens = GeneratorSet(polys, tuple(w) if w is not None else None)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"generators: {exc}") from exc
        return self._gens

    def grid(self, default_resolution: int = 1024) -> GridSpec:
        g = self.doc.get("grid")
        try:
            if g is None:
                return GridSpec(0, 1.0625 * ju.filled_radius(self.gens), default_resolution)
            return GridSpec.from_json(g)
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"grid: {exc}") from exc

    def spec(self, section: dict):
        try:
            return spec_from_json(section.get("sequence", {"kind": "periodic", "word": [1]}))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"sequence: {exc}") from exc


# --------------------------------------------------------------------------
# commands


def cmd_render_semigroup(job: Job, out: Path, threads: int) -> int:
    s = job.section("render")
    gens = job.gens
    n = int(s.get("n_points", 100000))
    if n < 1:
        raise ConfigError("render.n_points must be >= 1")
    grid = job.grid(int(s.get("resolution", 1024)))
    cloud = ju.backward_orbit_sample(gens, n, job.seed, burn_in=int(s.get("burn_in", 20)), threads=threads)
    cloud.write_csv(out / "cloud.csv")
    heur = ju.heuristic_julia_raster(gens, grid, depth=int(s.get("heuristic_depth", 6)), threads=threads)
    esc = np.where(heur, -1, 0).astype(np.int32)
    Raster(grid, esc, gens.R, int(s.get("heuristic_depth", 6)), meta={"kind": "escape-disparity heuristic"}
           ).write_pgm(out / "heuristic.pgm")
    summary = {"n_points": len(cloud), "seed": job.seed, "R": gens.R,
               "heuristic_cells": int(heur.sum()),
               "heuristic_components": ju.label_mask(heur, "heuristic", 8).count}
    if s.get("residual", True):
        res = ju.self_similarity_residual(gens, cloud)
        sp = median_spacing(cloud.points)
        summary.update(residual=res, median_spacing=sp, residual_over_spacing=res / sp if sp > 0 else None)
    write_json(out / "summary.json", summary)
    return EXIT_OK


def cmd_fiber(job: Job, out: Path, threads: int) -> int:
    s = job.section("fiber")
    gens = job.gens
    spec = job.spec(s)
    grid = job.grid(int(s.get("resolution", 1024)))
    max_iter = int(s.get("max_iter", 64))
    r = ju.fiber_raster(gens, spec, grid, max_iter, threads)
    r.write_pgm(out / "fiber.pgm")
    ju.boundary_cloud(r).write_csv(out / "boundary.csv")
    report = {"sequence": s.get("sequence"), "grid": grid.to_json(), "max_iter": max_iter,
              "bounded_cells": int(r.bounded.sum()),
              "interior_components": ju.components(r, "interior").count}
    if s.get("jordan", True):
        report["jordan"] = geo.jordan_test(r).to_json()
    if s.get("ratio", False):
        n_points = int(s.get("n_points", 256))
        refine = int(s.get("refine", 1))
        curve = geo.fiber_curve(gens, spec, grid, n_points, refine, max_iter, threads)
        report["ratio"] = geo.quasicircle_ratio(curve, seed=job.seed).to_json()
    john = s.get("john")
    if john:
        report["john"] = {}
        for region in john if isinstance(john, list) else [john]:
            est = geo.john_estimate(r, region, int(s.get("john_samples", 16)), job.seed)
            report["john"][str(region)] = est.to_json()
    write_json(out / "fiber.json", report)
    return EXIT_OK


def cmd_classify(job: Job, out: Path, threads: int) -> int:
    s = job.section("classify")
    th = cl.Thresholds(**s.get("thresholds", {}))
    rep = cl.classify_trichotomy(
        job.gens, n_sequences=int(s.get("n_sequences", 50)), prefix_len=int(s.get("prefix_len", 20)),
        grid=job.grid(int(s.get("resolution", 1024))), seed=job.seed, threads=threads,
        n_points=int(s.get("n_points", 256)), refine=int(s.get("refine", 16)), n_pairs=int(s.get("n_pairs", 10)),
        thresholds=th, john_samples=int(s.get("john_samples", 0)))
    write_json(out / "classification.json", rep.to_json())
    return EXIT_NEGATIVE if rep.case == "Mixed-evidence" else EXIT_OK


def cmd_check_pcb(job: Job, out: Path, threads: int) -> int:
    s = job.section("check_pcb")
    v = postcritical_bounded_check(job.gens, int(s.get("depth", 64)), int(s.get("budget", 10**6)),
                                   float(s.get("net", 1e-6)))
    write_json(out / "pcb.json", v.to_json())
    return EXIT_OK


def _regions(obj, what: str):
    if not isinstance(obj, list) or not obj:
        raise ConfigError(f"{what}: expected a list of {{center, radius}} disks")
    try:
        return [(_complex(d["center"], what), float(d["radius"])) for d in obj]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{what}: {exc}") from exc


def cmd_construct(job: Job, out: Path, threads: int) -> int:
    s = job.section("construct")
    action = s.get("action")
    result: dict = {"action": action}
    cert = None
    try:
        if action == "c0":
            c0, terms = co.c0_bound(job.gens, float(s.get("r", 0.1)), int(s.get("d", 3)))
            result.update(c0=c0, terms=terms)
        elif action == "attach":
            gens, cert = co.attach_generator(job.gens, _complex(s.get("b", 0), "b"), int(s.get("d", 3)),
                                             _complex(s["a"], "a"), None, float(s.get("r", 0.1)))
            result["generators"] = gens.to_json()
            result["postcritical"] = postcritical_bounded_check(gens).to_json()
        elif action == "family":
            h1 = _poly(s["h1"], "h1") if "h1" in s else job.gens[0]
            gens, cert = co.build_family(h1, [_complex(c, "centers") for c in s["centers"]],
                                         [int(d) for d in s["degrees"]], float(s.get("shrink", 0.5)))
            result["generators"] = gens.to_json()
        elif action == "power-pair":
            g1 = _poly(s["g1"], "g1") if "g1" in s else job.gens[0]
            g2 = _poly(s["g2"], "g2") if "g2" in s else job.gens[1]
            n, cert = co.power_pair(g1, g2, int(s.get("n_max", 6)))
            result["n"] = n
        elif action == "trap-check":
            cert = co.trapping_regions_check(job.gens, _regions(s.get("v1"), "v1"), _regions(s.get("v2"), "v2"))
        elif action == "invariance":
            cert = co.disk_invariance(job.gens, _regions(s.get("disks"), "disks"))
        elif action == "pullback":
            cert = co.annulus_pullback(job.gens, _complex(s.get("center", 0), "center"), float(s["inner"]),
                                       float(s["outer"]))
        else:
            raise ConfigError(f"construct.action must be one of c0, attach, family, power-pair, trap-check, "
                              f"invariance, pullback (got {action!r})")
    except KeyError as exc:
        raise ConfigError(f"construct: missing field {exc}") from exc
    except co.InvalidDegreePair as exc:
        raise ConfigError(str(exc)) from exc
    except (co.CertificateFailed, co.NotFound, co.PreconditionFailed) as exc:
        result["failed"] = {"error": type(exc).__name__, "message": str(exc)}
        c = getattr(exc, "certificate", None)
        if c is not None:
            result["certificate"] = c.to_json()
        write_json(out / "construct.json", result)
        return EXIT_NEGATIVE
    if cert is not None:
        result["certificate"] = cert.to_json()
    write_json(out / "construct.json", result)
    return EXIT_OK if cert is None or cert.ok else EXIT_NEGATIVE


def cmd_ray(job: Job, out: Path, threads: int) -> int:
    s = job.section("ray")
    tr = ju.external_ray(job.gens, job.spec(s), float(s.get("theta", 0.0)), int(s.get("steps", 2000)),
                         int(s.get("n", 48)))
    write_json(out / "ray.json", {"landed": tr.landed, "landing": tr.landing, "points": tr.points,
                                  "green": tr.green})
    return EXIT_OK


COMMANDS = {
    "render-semigroup": cmd_render_semigroup,
    "fiber": cmd_fiber,
    "classify": cmd_classify,
    "check-pcb": cmd_check_pcb,
    "construct": cmd_construct,
    "ray": cmd_ray,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polysemi", description="Polynomial semigroup and random dynamics toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path, help="JSON job document")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        if name == "construct":
            p.add_argument("action", nargs="?", help="overrides construct.action")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = json.loads(args.config.read_text())
        job = Job(doc, args.seed)
        if args.command == "construct" and args.action:
            job.doc.setdefault("construct", {})["action"] = args.action
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        # touch the generators now so that validation errors surface before compute
        _ = job.gens
        args.out.mkdir(parents=True, exist_ok=True)
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"polysemi: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](job, args.out, args.threads)
    except ConfigError as exc:
        print(f"polysemi: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - every compute failure maps to exit 3
        print(f"polysemi: {args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
