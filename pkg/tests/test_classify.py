import json

import pytest

from polysemi.classify import (PreconditionFailed, Thresholds, _decide, classify_trichotomy, pairwise_relation,
                               sample_specs)
from polysemi.julia import filled_radius
from polysemi.poly import Polynomial, compose
from polysemi.raster import GridSpec
from polysemi.semigroup import GeneratorSet, Periodic, Word

G1 = Polynomial([-1, 0, 1])
G2 = Polynomial([0, 0, 0.25])
EXAMPLE = GeneratorSet((compose(G1, G1), compose(G2, G2)))
CASE_I = GeneratorSet((Polynomial([0.01, 0, 1]), Polynomial([-0.02, 0, 0, 0.9])))
G1B = Polynomial([-1, 0, 1.001])
CASE_III = GeneratorSet((compose(G1, G1), compose(G1B, G1B)))

SMALL = dict(n_sequences=4, prefix_len=20, n_points=96, refine=4, n_pairs=2)


def small_grid(gens, res=256):
    return GridSpec(0, 1.0625 * filled_radius(gens), res)


def test_sample_specs_layout():
    specs = sample_specs(EXAMPLE, 3, seed=1)
    kinds = [k for k, _ in specs]
    assert kinds == ["periodic"] * 3 + ["iid"] * 3
    assert [s.word.indices for _, s in specs[:3]] == [(1,), (2,), (1, 2)]
    assert specs == sample_specs(EXAMPLE, 3, seed=1)


def test_example_periodic_pair_is_ordered():
    grid = GridSpec(0, 4.25, 256)
    rec = pairwise_relation(EXAMPLE, Periodic(Word((1,))), Periodic(Word((2,))), 20, grid)
    assert rec["relation"] in ("Less", "Greater")
    assert rec["min_distance"] > 2 * grid.cell


def test_same_spec_overlaps():
    grid = GridSpec(0, 4.25, 128)
    spec = Periodic(Word((1, 2)))
    assert pairwise_relation(EXAMPLE, spec, spec, 20, grid)["relation"] == "Overlap"


def test_refuses_escaping_family():
    with pytest.raises(PreconditionFailed):
        classify_trichotomy(GeneratorSet((Polynomial([0, 0, 1]), Polynomial([1, 0, 4]))), n_sequences=2)


def test_decide_never_claims_case_two_without_ordered_pair():
    seq = {"kind": "iid", "mixed": True, "jordan": {"status": "Jordan"},
           "ratio": {"coarse_max": 1.6, "fine_max": 6.0, "growth": 3.75}}
    case, _, summary = _decide([seq] * 5, [], Thresholds(), False)
    assert case != "II" and summary["ordered_pairs"] == 0
    pair = {"relation": "Less"}
    case, _, _ = _decide([seq] * 5, [pair], Thresholds(), False)
    assert case == "II"


def test_decide_mixed_when_nothing_holds():
    seq = {"kind": "iid", "mixed": True, "jordan": {"status": "NotJordan"}, "ratio": {"error": "x"}}
    case, reasons, _ = _decide([seq], [{"relation": "Less"}], Thresholds(), False)
    assert case == "Mixed-evidence" and len(reasons) == 3


def test_case_one_small_run():
    rep = classify_trichotomy(CASE_I, grid=small_grid(CASE_I), **SMALL)
    assert rep.case == "I", rep.reasons
    assert rep.summary["max_ratio_growth"] < 1.25
    assert all(p["relation"] in ("Overlap", "Less", "Greater") for p in rep.pairs)
    json.dumps(rep.to_json())


def test_case_three_small_run():
    rep = classify_trichotomy(CASE_III, grid=small_grid(CASE_III), **SMALL)
    assert rep.case == "III", rep.reasons
    assert all(s["interior_components"] >= 2 for s in rep.sequences)


def test_report_is_thread_independent():
    grid = small_grid(EXAMPLE, 192)
    kw = dict(SMALL, n_sequences=3)
    a = classify_trichotomy(EXAMPLE, grid=grid, threads=1, **kw).to_json()
    b = classify_trichotomy(EXAMPLE, grid=grid, threads=3, **kw).to_json()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_john_trends_are_recorded():
    rep = classify_trichotomy(EXAMPLE, grid=small_grid(EXAMPLE, 128), check=False, john_samples=4,
                              **dict(SMALL, n_sequences=1))
    j = rep.sequences[0]["john"]
    assert j["resolutions"] == [32, 128] and "coarse" in j["exterior"]
