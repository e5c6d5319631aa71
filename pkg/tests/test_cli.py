import json

import pytest

from approxconvex.cli import main, resolve_function
from approxconvex.defects import affinity_defect
from approxconvex.gallery import ribe_rows
from approxconvex.grids import enumerate_convex_triples, make_simplex_grid, sample_function


def run(tmp_path, *argv):
    out = tmp_path / "out"
    code = main([*argv, "--out", str(out)])
    return code, out


def load(path):
    return json.loads(path.read_text())


def test_defect_entropy(tmp_path):
    code, out = run(tmp_path, "defect", "--body", "simplex", "--dim", "4", "--k", "3",
                    "--fn", "entropy", "--kind", "convex")
    assert code == 0
    assert load(out / "defect.json")["value"] <= 1 + 1e-9
    assert "defect.json" in load(out / "manifest.json")["outputs"]


def test_defect_affine_jensen_is_zero(tmp_path):
    code, out = run(tmp_path, "defect", "--body", "cube", "--dim", "1", "--k", "2",
                    "--fn", "affine:1,0", "--kind", "jensen")
    assert code == 0
    assert load(out / "defect.json")["value"] == 0


def test_defect_ribe_matches_library(tmp_path):
    code, out = run(tmp_path, "defect", "--body", "simplex", "--dim", "3", "--k", "3",
                    "--fn", "ribe", "--kind", "affine")
    dom = make_simplex_grid(3, 3)
    expect = affinity_defect(sample_function(dom, ribe_rows, vectorized=True),
                             enumerate_convex_triples(dom, 3)).value
    assert code == 0
    assert load(out / "defect.json")["value"] == expect


def test_distance_examples(tmp_path):
    code, out = run(tmp_path, "distance", "--body", "simplex", "--dim", "4", "--k", "2",
                    "--fn", "entropy", "--class", "convex", "--method", "both")
    assert code == 0
    assert load(out / "distance.json")["distance"] == pytest.approx(1.0, abs=1e-9)
    code, out = run(tmp_path, "distance", "--body", "cube", "--dim", "1", "--k", "3",
                    "--fn", "sqnorm", "--class", "affine")
    assert load(out / "distance.json")["distance"] == pytest.approx(0.5)
    code, out = run(tmp_path, "distance", "--body", "cube", "--dim", "2", "--k", "1",
                    "--fn", "affine:1,-1,2", "--class", "jensen")
    assert code == 0
    assert load(out / "distance.json")["distance"] == pytest.approx(0.0, abs=1e-12)


def test_gallery_omega_table(tmp_path):
    code, out = run(tmp_path, "gallery", "--family", "omega", "--n", "1..8")
    assert code == 0
    lines = (out / "gallery_omega.csv").read_text().splitlines()
    assert lines[0] == "n,flat_value,extreme_max,lower_bound_formula"
    assert [int(float(l.split(",")[1])) for l in lines[1:]] == list(range(1, 9))
    assert (out / "gallery_omega.dat").read_text().startswith("# n flat_value")


def test_talagrand(tmp_path):
    code, out = run(tmp_path, "talagrand", "--eps", "1", "--n", "2,3,4", "--p", "1/2")
    assert code == 0
    rows = (out / "talagrand_gap.csv").read_text().splitlines()[1:]
    assert [float(r.split(",")[3]) for r in rows] == [2.0, 2.0, 2.0]
    checks = load(out / "manifest.json")["checks"]
    assert checks and all(checks.values())


def test_preimage(tmp_path):
    code, out = run(tmp_path, "preimage", "--dim", "4", "--eps", "0", "--k", "20")
    assert code == 0
    rows = [l.split(",") for l in (out / "preimage_trace.csv").read_text().splitlines()[1:]]
    assert len(rows) == 21
    assert all(float(r) <= float(e) for _, r, e in rows)


def test_lift(tmp_path):
    code, out = run(tmp_path, "lift", "--body", "cube", "--dim", "2", "--k", "2",
                    "--fn", "affine:1,2,0", "--noise", "0.05", "--jensen")
    assert code == 0
    data = load(out / "lift.json")
    assert data["holds"] and data["measured_d"] <= data["theoretical_bound"]
    assert (out / "lift_jensen.json").exists()


def test_failed_check_exits_one(tmp_path, capsys):
    code, _ = run(tmp_path, "defect", "--body", "simplex", "--dim", "4", "--k", "2",
                  "--fn", "entropy", "--expect-max", "0.5")
    assert code == 1
    summary = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert summary["failed_checks"]


def test_unknown_function_lists_registry(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        run(tmp_path, "defect", "--body", "cube", "--dim", "1", "--k", "1", "--fn", "bogus")
    assert exc.value.code == 2
    err = capsys.readouterr().err
    assert "entropy" in err and "fstar" in err


def test_parameter_error_exits_two(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(tmp_path, "talagrand", "--eps", "1/2", "--n", "3")
    assert exc.value.code == 2


def test_file_input(tmp_path):
    path = tmp_path / "vals.json"
    path.write_text(json.dumps({"values": [0.0, 1.0, 0.0]}))
    code, out = run(tmp_path, "distance", "--body", "positive_cone_section", "--dim", "1",
                    "--k", "1", "--fn", f"file:{path}", "--class", "convex")
    assert code == 0
    assert load(out / "distance.json")["distance"] == pytest.approx(0.5)


def test_replay_is_byte_identical(tmp_path):
    code, out = run(tmp_path, "gallery", "--family", "f_star", "--n", "2,4,8")
    assert code == 0
    replay = tmp_path / "again"
    assert main(["replay", str(out / "manifest.json"), "--out", str(replay)]) == 0
    for name in load(out / "manifest.json")["outputs"]:
        assert (out / name).read_bytes() == (replay / name).read_bytes()
    assert load(replay / "manifest.json")["checks"]["outputs_identical"]


def test_seeded_runs_repeat(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    argv = ["lift", "--body", "cube", "--dim", "2", "--k", "1", "--fn", "affine:1,0,0",
            "--noise", "0.1", "--seed", "7"]
    assert main([*argv, "--out", str(a)]) == 0
    assert main([*argv, "--out", str(b)]) == 0
    assert (a / "lift.json").read_bytes() == (b / "lift.json").read_bytes()


def test_resolve_function_names():
    import numpy as np
    X = np.array([[0.5, 0.5]])
    assert resolve_function("entropy", 2)(X)[0] == 1.0
    assert resolve_function("neglog:l1", 2)(X)[0] == 0.0
    assert resolve_function("fstar:blocks:theta=dyadic", 2)(X)[0] >= 0
