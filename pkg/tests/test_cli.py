import json

import pytest

from gyron.averaging import BosonicPolynomial, normal_order
from gyron.cli import main


def test_rep_ok(tmp_path):
    out = tmp_path / "rep.json"
    assert main(["rep", "--l", "2", "--m", "3", "--hbar", "0.5", "--emax", "4", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["ok"] and doc["failures"] == []
    assert len(doc["representations"]) > 1


def test_rep_bad_params(tmp_path, capsys):
    assert main(["rep", "--l", "2", "--m", "4", "--r", "1", "--out", str(tmp_path / "x.json")]) == 2
    assert "error" in capsys.readouterr().err


def test_missing_selection(tmp_path):
    assert main(["rep", "--out", str(tmp_path / "x.json")]) == 2


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"l": 1, "m": 2, "hbar": 0.3, "r": 2}))
    out = tmp_path / "rep.json"
    assert main(["rep", "--config", str(cfg), "--r", "3", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["m"] == 2 and doc["hbar"] == 0.3
    assert [rep["matrices"]["r"] for rep in doc["representations"]] == [3]
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["rep", "--config", str(cfg), "--out", str(out)]) == 2


def test_geometry_outputs(tmp_path):
    assert main(["geometry", "--l", "1", "--m", "2", "--hbar", "0.5", "--r", "3", "--p", "1",
                 "--out", str(tmp_path)]) == 0
    ident = json.loads((tmp_path / "identities_r3_q0_p1.json").read_text())
    assert ident["ok"]
    assert abs(ident["omega_integral"] - 3) < 1e-8
    assert (tmp_path / "geometry_r3_q0_p1.csv").exists()
    assert (tmp_path / "leaf_r3_q0_p1.csv").exists()


def test_geometry_tolerance_failure(tmp_path):
    assert main(["geometry", "--l", "2", "--m", "3", "--r", "2", "--tol-omega", "1e-30",
                 "--out", str(tmp_path)]) == 1
    assert main(["geometry", "--r", "2", "--tol-omega", "-1", "--out", str(tmp_path)]) == 2


def test_spectrum_default_perturbation(tmp_path):
    assert main(["spectrum", "--l", "1", "--m", "1", "--hbar", "0.1", "--r", "10", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "spectrum_r10_q0_p0.json").read_text())
    assert doc["max_abs_error"] < 1e-9
    assert (tmp_path / "area_r10_q0_p0.csv").exists()
    assert json.loads((tmp_path / "summary.json").read_text())["labels"]


def test_spectrum_exact_only(tmp_path):
    assert main(["spectrum", "--l", "2", "--m", "3", "--r", "2", "--exact-only", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "spectrum_r2_q0_p0.json").read_text())
    assert doc["semiclassical"] is None


def test_spectrum_multiwell_exit(tmp_path):
    # (b1* b2 + b2* b1)^2 is resonant for l = m = 1 and has a double-well symbol
    x = normal_order(["b1*", "b2"], 1.0) + normal_order(["b2*", "b1"], 1.0)
    sq = BosonicPolynomial()
    for w1 in (["b1*", "b2"], ["b2*", "b1"]):
        for w2 in (["b1*", "b2"], ["b2*", "b1"]):
            sq = sq + normal_order(w1 + w2, 0.1)
    assert x.is_hermitian()
    path = tmp_path / "b.json"
    path.write_text(json.dumps(sq.to_json()))
    assert main(["spectrum", "--hbar", "0.1", "--r", "10", "--perturbation", str(path),
                 "--out", str(tmp_path)]) == 4


def test_spectrum_missing_perturbation(tmp_path):
    assert main(["spectrum", "--r", "2", "--perturbation", str(tmp_path / "none.json")]) == 2


def test_spectrum_sweep(tmp_path):
    path = tmp_path / "n.json"
    path.write_text(json.dumps(BosonicPolynomial({(0, 1, 0, 1): 1.0}).to_json()))
    assert main(["spectrum", "--l", "1", "--m", "2", "--sweep-r", "4,8", "--energy", "1.0",
                 "--perturbation", str(path), "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "convergence.json").read_text())
    assert [row["r"] for row in doc["convergence"]] == [4, 8]


def test_bad_sweep_value(tmp_path):
    assert main(["spectrum", "--sweep-r", "4,x", "--out", str(tmp_path)]) == 2


def test_argparse_requires_command():
    with pytest.raises(SystemExit):
        main([])
