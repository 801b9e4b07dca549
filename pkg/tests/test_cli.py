import csv
import json

import numpy as np
import pytest

from hessmink import isometry as iso
from hessmink.cli import main

RANDERS_SPEC = {"kind": "randers", "alpha": [[1.0, 0.2, 0.0], [0.2, 1.5, 0.0], [0.0, 0.0, 1.0]],
                "beta": [0.1, -0.2, 0.3]}
PROFILE_SPEC = {"kind": "profile", "k": 1, "n": 3,
                "profile": {"cos": [1.0, 0.0, 0.15, 0.0, 0.03], "period": "pi"}}


def _write(path, data):
    path.write_text(json.dumps(data))
    return str(path)


def test_tensors_command_writes_csv(tmp_path, capsys):
    spec = _write(tmp_path / "r.json", RANDERS_SPEC)
    out = tmp_path / "R.csv"
    assert main(["tensors", "--spec", spec, "--point", "1,0.5,0.2", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["i", "j", "k", "l", "value"] and len(rows) == 82
    assert "residuals" in json.loads(capsys.readouterr().out)


def test_legendre_check_reports_max_residual(tmp_path, capsys):
    spec = _write(tmp_path / "r.json", RANDERS_SPEC)
    assert main(["legendre-check", "--spec", spec, "--samples", "10"]) == 0
    assert capsys.readouterr().out.startswith("max residual: ")


def test_profile_scan_grid(tmp_path, capsys):
    spec = _write(tmp_path / "p.json", PROFILE_SPEC)
    out = tmp_path / "grid.csv"
    assert main(["profile-scan", "--spec", spec, "--samples", "50", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 51
    assert json.loads(capsys.readouterr().out)["max_abs_R"] > 0


def test_classify_command(tmp_path, capsys):
    m, _ = iso.linear_example(0.7, 1.3, 1, 3)
    samples = iso.sample_map_on_meridian(m, 1, 3, np.linspace(0.15, 0.65, 30))
    path = _write(tmp_path / "s.json", {"profile": PROFILE_SPEC["profile"], "k": 1, "n": 3,
                                        "samples": samples.to_json()})
    assert main(["classify", path]) == 0
    assert {b["verdict"] for b in json.loads(capsys.readouterr().out)["bands"]} == {"linear"}


def test_glue_command(tmp_path, capsys):
    out = tmp_path / "glue.json"
    assert main(["glue", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["max_residual"] < 1e-7 and report["diff_from_legendre"] > 0


def test_polar2d_lengths(tmp_path, capsys):
    a = _write(tmp_path / "a.json", {"kind": "euclidean", "A": [[2.0, 0.0], [0.0, 1.0]]})
    b = _write(tmp_path / "b.json", {"kind": "euclidean", "A": [[1.0, 0.3], [0.3, 1.0]]})
    assert main(["polar2d", "--spec", a, "--spec2", b]) == 0
    assert json.loads(capsys.readouterr().out)["isometric"] is True


def test_acceptance_subset(capsys):
    assert main(["acceptance", "--only", "1"]) == 0
    assert "PASS [ 1]" in capsys.readouterr().out


@pytest.mark.parametrize("content", [None, "{not json", json.dumps({"kind": "nonsense"})])
def test_bad_input_exits_with_code_two(tmp_path, capsys, content):
    path = tmp_path / "spec.json"
    if content is not None:
        path.write_text(content)
    assert main(["tensors", "--spec", str(path)]) == 2
    assert capsys.readouterr().err.startswith("error: ")
