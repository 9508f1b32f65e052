import json
from pathlib import Path

import pytest

from grushin_lab.cli import EXIT_ASSUMPTION, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main

CUBIC = {
    "n": 1,
    "N0": 2,
    "p": [[{"alpha": [2, 0], "re": 1.0}, {"alpha": [0, 2], "re": 1.0},
           {"alpha": [3, 0], "re": 1.0}]],
    "z0": "bottom",
    "N_cut": 40,
    "h": [0.02, 0.01, 0.005],
    "validate": {"N_cut": 60},
}


def _run(tmp_path: Path, command: str, cfg, out="out") -> tuple[int, dict]:
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(cfg if isinstance(cfg, str) else json.dumps(cfg))
    code = main([command, "--config", str(cfg_path), "--out", str(tmp_path / out)])
    report = json.loads((tmp_path / out / "report.json").read_text())
    return code, report


def test_analyze_ok(tmp_path):
    code, rep = _run(tmp_path, "analyze", CUBIC)
    assert code == EXIT_OK
    q = rep["quadratic"]
    assert q["k0"] == 0
    assert q["lattice"][0]["value"] == pytest.approx({"re": 1.0, "im": 0.0})
    assert any("sector" in c for c in rep["caveats"])


def test_grushin_report(tmp_path):
    code, rep = _run(tmp_path, "grushin", CUBIC)
    assert code == EXIT_OK
    g = rep["grushin"]
    assert g["d"] == 1
    assert g["expansion"]["ztilde"][1]["re"] == pytest.approx(-11 / 16, abs=1e-8)
    assert g["parity_audit"]["performed"]
    assert len(g["residuals"]) == 3


def test_validate_passes(tmp_path):
    code, rep = _run(tmp_path, "validate", CUBIC)
    assert code == EXIT_OK
    assert rep["validation"]["passed"]
    assert rep["status"] == "ok"


def test_idempotent(tmp_path):
    _, a = _run(tmp_path, "grushin", CUBIC, out="a")
    _, b = _run(tmp_path, "grushin", CUBIC, out="b")
    a.pop("timestamp")
    b.pop("timestamp")
    assert a == b


@pytest.mark.parametrize("cfg", [
    "{not json",
    {k: v for k, v in CUBIC.items() if k != "N_cut"},
    dict(CUBIC, z_tail=[0] * 9),
    dict(CUBIC, guard=-1),
])
def test_invalid_config(tmp_path, cfg):
    code, rep = _run(tmp_path, "analyze", cfg)
    assert code == EXIT_CONFIG
    assert rep["status"].startswith("invalid config")


def test_nonelliptic_aborts(tmp_path):
    cfg = dict(CUBIC, N0=1, p=[[{"alpha": [2, 0], "re": 1.0}]])
    code, rep = _run(tmp_path, "analyze", cfg)
    assert code == EXIT_ASSUMPTION
    assert rep["abort"]["role"] == "full ellipticity"


def test_negative_real_part_aborts(tmp_path):
    cfg = dict(CUBIC, p=[[{"alpha": [2, 0], "re": -1.0}, {"alpha": [0, 2], "re": 1.0}]])
    code, rep = _run(tmp_path, "analyze", cfg)
    assert code == EXIT_ASSUMPTION
    assert rep["abort"]["role"] == "nonnegativity"


def test_not_double_characteristic(tmp_path):
    cfg = dict(CUBIC, p=[CUBIC["p"][0] + [{"alpha": [1, 0], "re": 1.0}]])
    code, rep = _run(tmp_path, "analyze", cfg)
    assert code == EXIT_ASSUMPTION
    assert rep["abort"]["role"] == "double characteristic"


def test_z0_off_lattice(tmp_path):
    code, rep = _run(tmp_path, "grushin", dict(CUBIC, z0=2.0))
    assert code == EXIT_ASSUMPTION
    assert rep["abort"]["role"] == "spectral parameter on the lattice"


def test_small_guard_is_numerical_failure(tmp_path):
    code, rep = _run(tmp_path, "grushin", dict(CUBIC, guard=4))
    assert code == EXIT_NUMERIC
    assert "guard" in rep["status"]


def test_pseudospectrum_writes_grids(tmp_path):
    cfg = {
        "n": 1, "N0": 2,
        "p": [[{"alpha": [0, 2], "re": 1.0}, {"alpha": [2, 0], "im": 1.0},
               {"alpha": [4, 0], "re": 0.1}]],
        "N_cut": 30, "h": [0.02, 0.01],
        "scan": {"rect": [-0.1, 0.1, -0.1, 0.1], "res": 12},
    }
    code, rep = _run(tmp_path, "pseudospectrum", cfg)
    assert code == EXIT_OK
    files = rep["pseudospectrum"]["files"]
    assert files == ["grid_0.02.csv", "grid_0.01.csv"]
    lines = (tmp_path / "out" / files[0]).read_text().splitlines()
    assert lines[0] == "re_z,im_z,sigma_min" and len(lines) == 145
    assert "stability" in rep["pseudospectrum"]
