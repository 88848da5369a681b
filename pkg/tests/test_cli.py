import json
import subprocess
import sys

import pytest

from certifem import cli


def run_cli(*args):
    return cli.main(list(args))


def test_mesh_gen_stats_pipeline(tmp_path):
    out = str(tmp_path / "m8.json")
    assert run_cli("mesh", "gen", "--shape", "regular-polygon", "--m", "8", "--refine", "0", "--out", out) == 0
    stats_path = str(tmp_path / "stats.json")
    assert run_cli("mesh", "stats", "--mesh", out, "--out", stats_path) == 0
    stats = json.load(open(stats_path))
    assert stats["element_count"] == 8
    assert stats["nonblunt"] is True


def test_mesh_stats_right_triangle(tmp_path):
    mesh_path = str(tmp_path / "tri.json")
    json.dump({"dim": 2, "nodes": [[0, 0], [1, 0], [0, 1]], "elements": [[0, 1, 2]]}, open(mesh_path, "w"))
    stats_path = str(tmp_path / "s.json")
    assert run_cli("mesh", "stats", "--mesh", mesh_path, "--out", stats_path) == 0
    stats = json.load(open(stats_path))
    assert stats["min_angle"] == pytest.approx(0.7853981633974483, rel=1e-12)


def test_mesh_convert_round_trip(tmp_path):
    src = str(tmp_path / "m6.json")
    assert run_cli("mesh", "gen", "--m", "6", "--refine", "1", "--out", src) == 0
    node = str(tmp_path / "m6.node")
    assert run_cli("mesh", "convert", "--in", src, "--out", node) == 0
    back = str(tmp_path / "back.json")
    assert run_cli("mesh", "convert", "--in", node, "--out", back) == 0
    a = json.load(open(src))
    b = json.load(open(back))
    assert a == b


def test_mesh_io_error_codes(tmp_path):
    assert run_cli("mesh", "stats", "--mesh", str(tmp_path / "missing.json")) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{broken")
    assert run_cli("mesh", "stats", "--mesh", str(bad)) == 1


def test_certify_disk_exact_mode(tmp_path):
    report = str(tmp_path / "report.json")
    rc = run_cli(
        "certify", "--domain", "disk:1.0", "--generate", "50,3",
        "--f", "const:1", "--fh-mode", "exact", "--out", report,
    )
    assert rc == 0
    obj = json.load(open(report))
    assert obj["terms"]["source"] == 0.0
    assert obj["terms"]["boundary"] > 0.0
    assert obj["total"] > 0.0


def test_certify_square_polygon(tmp_path):
    poly_path = str(tmp_path / "square.json")
    json.dump({"dim": 2, "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]}, open(poly_path, "w"))
    report = str(tmp_path / "report.json")
    rc = run_cli(
        "certify", "--domain", f"polygon:{poly_path}", "--generate", "3",
        "--f", "sinsin", "--fh-mode", "nodal", "--strategy", "nonblunt", "--out", report,
    )
    assert rc == 0
    obj = json.load(open(report))
    assert obj["terms"]["boundary"] == 0.0
    assert obj["terms"]["source"] > 0.0


def test_certify_nonblunt_on_blunt_mesh_exits_2(tmp_path, capsys):
    rc = run_cli(
        "certify", "--domain", "disk:1.0", "--generate", "3,0",
        "--f", "const:1", "--strategy", "nonblunt",
    )
    assert rc == 2
    err = capsys.readouterr().err
    assert "element" in err  # diagnostic names the worst element


def test_certify_rejects_bad_config():
    assert run_cli("certify", "--domain", "disk:1.0") == 2  # no mesh source
    assert run_cli("certify", "--domain", "blob:1.0", "--generate", "8,0") == 2


def test_verify_square_convergence(tmp_path):
    out = str(tmp_path / "v.json")
    assert run_cli("verify", "--exact", "square2d", "--levels", "8,16,32", "--out", out) == 0
    obj = json.load(open(out))
    assert 1.8 <= obj["slope"] <= 2.2
    for level in obj["levels"]:
        assert level["ratio"] > 1.0


def test_verify_disk_single(tmp_path):
    out = str(tmp_path / "d.json")
    assert run_cli("verify", "--exact", "disk2d", "--m", "16", "--out", out) == 0
    obj = json.load(open(out))
    assert obj["actual"] <= obj["certified"]
    assert obj["actual"] <= obj["predicted"]
    assert obj["ratio"] > 1.0


def test_verify_unknown_exact():
    assert run_cli("verify", "--exact", "nope") == 2


def test_disk_study_csv(tmp_path, capsys):
    csv_path = str(tmp_path / "rows.csv")
    assert run_cli("disk-study", "--m", "10,20", "--csv", csv_path) == 0
    lines = open(csv_path).read().strip().splitlines()
    assert lines[0] == "m,h,A_m,actual,predicted,ratio"
    for line in lines[1:]:
        fields = line.split(",")
        assert float(fields[5]) > 1.0  # predicted always above actual
    err = capsys.readouterr().err
    assert "reference(delaunay)" in err


def test_reports_byte_identical(tmp_path):
    r1, r2 = str(tmp_path / "a.json"), str(tmp_path / "b.json")
    for path in (r1, r2):
        assert run_cli("certify", "--domain", "disk:1.0", "--generate", "20,2", "--out", path) == 0
    assert open(r1, "rb").read() == open(r2, "rb").read()


def test_bound_violation_exit_code(monkeypatch, capsys):
    from certifem import BoundViolationError

    def explode(*args, **kwargs):
        raise BoundViolationError("measured 1.0 exceeds certified 0.5")

    monkeypatch.setattr(cli.vermod, "run_disk_study", explode)
    assert run_cli("disk-study", "--m", "10") == 3
    assert "BOUND VIOLATED" in capsys.readouterr().err


def test_console_entry_point(tmp_path):
    out = str(tmp_path / "m5.json")
    proc = subprocess.run(
        [sys.executable, "-m", "certifem.cli", "mesh", "gen", "--m", "5", "--out", out],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.load(open(out))["dim"] == 2
