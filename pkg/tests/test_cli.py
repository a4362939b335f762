import json
import os
import subprocess
import sys

import pytest

from nevanlab.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, EXIT_PRECONDITION, main

C2_FMT = """\
[manifold]
base = euclidean
m = 2

[map]
family = z
coord = 0

[divisors]
points = inf

[grid]
min = 1
max = 3
count = 3

[quadrature]
rtol = 1e-5
"""


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_fmt_writes_all_outputs(tmp_path):
    out = tmp_path / "out"
    assert main(["fmt", "--config", write(tmp_path, C2_FMT), "--out", str(out)]) == EXIT_OK
    assert sorted(os.listdir(out)) == ["curves.csv", "summary.txt", "table.csv", "table.json"]
    summary = (out / "summary.txt").read_text()
    assert summary.startswith("# resolved configuration\n[run]") and "mode = auto" in summary
    assert "A = 0.5" in summary and summary.rstrip().endswith("PASS fmt closure")
    data = json.loads((out / "table.json").read_text())
    assert data["mode"] == "non-parabolic" and len(data["rows"]) == 3
    assert (out / "table.csv").read_text().count("\n") == 4


def test_tiny_tolerance_fails_the_closure(tmp_path):
    # the residual of z1 against inf is exactly zero, so use a Möbius map on a coarse rule
    text = C2_FMT.replace("family = z", "family = mobius\nmobius = 1 -2 1 3").replace("points = inf", "points = 0")
    cfg = write(tmp_path, text.replace("rtol = 1e-5", "rtol = 1e-2"))
    assert main(["fmt", "--config", cfg, "--out", str(tmp_path / "o"), "--tolerance", "1e-14", "--grid", "2:3:2"]) == EXIT_FAIL
    assert "FAIL fmt closure" in (tmp_path / "o" / "summary.txt").read_text()


def test_config_errors_exit_two(tmp_path, capsys):
    bad = write(tmp_path, C2_FMT + "\n[extra]\nx = 1\n")
    assert main(["fmt", "--config", bad, "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "unknown section" in capsys.readouterr().err
    forced = write(tmp_path, "[manifold]\nbase = euclidean\nm = 1\n[exhaustion]\nmode = non-parabolic\n", "c.cfg")
    assert main(["table", "--config", forced, "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "volume criterion" in capsys.readouterr().err
    assert main(["table", "--config", str(tmp_path / "none.cfg")]) == EXIT_CONFIG
    assert main(["table", "--config", write(tmp_path, C2_FMT), "--grid", "3:1:2"]) == EXIT_CONFIG


def test_too_few_targets_exit_three(tmp_path, capsys):
    text = "[manifold]\nbase = euclidean\n[map]\nfamily = exp\n[divisors]\npoints = 0, inf\n[grid]\nmin = 5\nmax = 6\ncount = 2\n"
    assert main(["smt", "--config", write(tmp_path, text), "--out", str(tmp_path / "o")]) == EXIT_PRECONDITION
    assert "q > n + 1" in capsys.readouterr().err


def test_constant_map_table_is_all_zero(tmp_path):
    text = "[manifold]\nbase = euclidean\n[map]\nfamily = constant\nvalue = 2\n[divisors]\npoints = 0\n[grid]\nmin = 2\nmax = 4\ncount = 2\n"
    out = tmp_path / "o"
    assert main(["table", "--config", write(tmp_path, text), "--out", str(out)]) == EXIT_OK
    rows = json.loads((out / "table.json").read_text())["rows"]
    assert all(row["T"] == 0.0 and row["divisors"]["0"]["N"] == 0.0 for row in rows)


def test_geometry_command(tmp_path):
    text = "[manifold]\nbase = euclidean\nm = 2\n[geometry]\nradii = 1, 5\nproperties = boundary_is_geodesic_sphere, gradient_law\n"
    out = tmp_path / "g"
    assert main(["geometry", "--config", write(tmp_path, text), "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "geometry.json").read_text())
    assert [p["name"] for p in report["properties"]] == ["boundary_is_geodesic_sphere", "gradient_law"]
    assert all(p["pass"] for p in report["properties"])
    assert report["config"]["manifold"] == {"base": "euclidean", "m": "2"}


def test_module_entry_point_and_usage_errors(tmp_path):
    res = subprocess.run([sys.executable, "-m", "nevanlab", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "geometry" in res.stdout
    with pytest.raises(SystemExit) as exc:
        main(["serve"])
    assert exc.value.code == 2
