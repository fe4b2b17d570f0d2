import json

import pytest

from oracles import C0_HAND
from polysemi.cli import main

Z2M1 = [[-1, 0], [0, 0], [1, 0]]
QUARTER = [[0, 0], [0, 0], [0.25, 0]]


def run(tmp_path, cmd, cfg, *extra, name="job.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    out = tmp_path / "out"
    return main([cmd, "--config", str(path), "--out", str(out), "--threads", "1", *extra]), out


def test_config_errors_exit_2(tmp_path):
    code, _ = run(tmp_path, "check-pcb", {"generators": []})
    assert code == 2
    code, _ = run(tmp_path, "check-pcb", {"generators": [[[1, 0]]]})
    assert code == 2
    (tmp_path / "bad.json").write_text("{not json")
    assert main(["check-pcb", "--config", str(tmp_path / "bad.json"), "--out", str(tmp_path)]) == 2


def test_unknown_command_exits_nonzero():
    with pytest.raises(SystemExit) as err:
        main(["no-such-command"])
    assert err.value.code != 0


def test_check_pcb_escaped(tmp_path):
    code, out = run(tmp_path, "check-pcb", {"generators": [[[1, 0], [0, 0], [1, 0]]]})
    assert code == 0
    v = json.loads((out / "pcb.json").read_text())
    assert v["status"] == "Escaped" and v["witness"]["word"] == [1, 1]
    assert v["witness"]["value"] == [5.0, 0.0]


def test_construct_c0(tmp_path):
    code, out = run(tmp_path, "construct", {"generators": [Z2M1], "construct": {"r": 0.1, "d": 3}}, "c0")
    assert code == 0
    rec = json.loads((out / "construct.json").read_text())
    assert abs(rec["c0"] - C0_HAND) <= 1e-12 * C0_HAND


def test_construct_failure_exits_4(tmp_path):
    cfg = {"generators": [Z2M1], "construct": {"action": "trap-check",
                                                "v1": [{"center": [0, 0], "radius": 0.6}],
                                                "v2": [{"center": [-1, 0], "radius": 0.6}]}}
    code, out = run(tmp_path, "construct", cfg)
    assert code == 4
    assert "failed" in json.loads((out / "construct.json").read_text())


def test_fiber_outputs_are_idempotent(tmp_path):
    cfg = {"generators": [Z2M1, QUARTER], "seed": 3,
           "fiber": {"sequence": {"kind": "iid", "weights": [0.5, 0.5], "seed": 9}, "resolution": 128}}
    code, out = run(tmp_path, "fiber", cfg)
    assert code == 0
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    assert {"fiber.pgm", "fiber.pgm.json", "boundary.csv", "fiber.json"} <= set(first)
    code, out = run(tmp_path, "fiber", cfg)
    assert {p.name: p.read_bytes() for p in out.iterdir()} == first


def test_render_thread_independent(tmp_path):
    cfg = {"generators": [Z2M1, QUARTER], "seed": 1,
           "render": {"n_points": 3000, "resolution": 64, "heuristic_depth": 3}}
    path = tmp_path / "job.json"
    path.write_text(json.dumps(cfg))
    outs = []
    for t in ("1", "3"):
        out = tmp_path / f"out{t}"
        assert main(["render-semigroup", "--config", str(path), "--out", str(out), "--threads", t]) == 0
        outs.append({p.name: p.read_bytes() for p in out.iterdir()})
    assert outs[0] == outs[1]
    summary = json.loads(outs[0]["summary.json"])
    assert summary["n_points"] == 3000


def test_ray(tmp_path):
    cfg = {"generators": [[[0, 0], [0, 0], [1, 0]]], "ray": {"sequence": {"kind": "periodic", "word": [1]},
                                                             "theta": 0.0}}
    code, out = run(tmp_path, "ray", cfg)
    assert code == 0
    rec = json.loads((out / "ray.json").read_text())
    assert rec["landed"] and abs(rec["landing"][0] - 1) < 1e-3
