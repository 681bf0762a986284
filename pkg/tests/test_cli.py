import json
import math
import re

import pytest

from zigzaglab import cli


def lshape_config(**solver):
    base = {"h": math.pi / 12, "S": 10.0, "k": 1, "refine": 1, "seed": 1234}
    base.update(solver)
    return {
        "domain": {"kind": "l_shape", "d": math.pi, "unit": "1"},
        "solver": base,
        "units": {"m": 1.0, "c": 1.0, "hbar": 1.0},
    }


def test_solve_outputs_and_provenance(tmp_path):
    out = tmp_path / "run"
    payload = cli.cmd_solve(lshape_config(refine=2), str(out))
    assert (out / "result.json").exists()
    assert (out / "eigenvalues.csv").exists()
    assert (out / "spectrum.png").exists() and (out / "spectrum.png").stat().st_size > 0
    doc = json.loads((out / "result.json").read_text())
    for key in ("h", "S", "seed", "refine", "sector"):
        assert key in doc["solver"]
    assert doc["schema_version"] == 1
    assert "timestamp" in doc
    assert doc["extrapolated"] is not None
    assert payload["eigenvalues"][0]["lambda_dirac_plus"] > 0


def test_solve_json_deterministic(tmp_path):
    cfg = lshape_config()
    a = cli.cmd_solve(cfg, str(tmp_path / "a"), figures=False)
    b = cli.cmd_solve(cfg, str(tmp_path / "b"), figures=False)
    ta = (tmp_path / "a" / "result.json").read_text()
    tb = (tmp_path / "b" / "result.json").read_text()
    strip = lambda t: re.sub(r'\s*"timestamp": "[^"]*",?\n', "\n", t)
    assert strip(ta) == strip(tb)


def test_csv_column_order(tmp_path):
    cli.cmd_solve(lshape_config(), str(tmp_path), fmt="csv", figures=False)
    header = (tmp_path / "eigenvalues.csv").read_text().splitlines()[0]
    assert header == "index,lambda_laplace,lambda_dirac_plus,lambda_dirac_minus,multiplicity,residual"


def test_no_figures_flag(tmp_path):
    cli.cmd_solve(lshape_config(), str(tmp_path), figures=False)
    assert not (tmp_path / "spectrum.png").exists()


def test_straight_strip_has_empty_discrete_list(tmp_path):
    cfg = {
        "domain": {"kind": "bent_strip", "a": 1.0,
                   "gamma": {"kind": "zero", "support": [0.0, 0.0], "beta": 1.0}},
        "solver": {"h": 1 / 8, "S": 10.0, "k": 1, "seed": 1234},
        "units": {"m": 0.0, "c": 1.0, "hbar": 1.0},
    }
    payload = cli.cmd_solve(cfg, str(tmp_path), figures=False)
    assert payload["dirac"]["discrete"] == []
    assert len(payload["dirac"]["bands"]) == 2


def test_sector_solve_uses_sector_threshold(tmp_path):
    cfg = {
        "domain": {"kind": "cross", "d": math.pi, "unit": "1"},
        "solver": {"h": math.pi / 16, "S": 8.0, "k": 1, "seed": 1234,
                   "sector": "oo"},
        "units": {"m": 0.0, "c": 1.0, "hbar": 1.0},
    }
    payload = cli.cmd_solve(cfg, str(tmp_path), figures=False)
    assert payload["threshold_laplacian"] == pytest.approx(4.0)
    assert 3.0 < payload["eigenvalues"][0]["lambda_laplace"] < 4.0


def test_study_window_report(tmp_path):
    cfg = {
        "domain": {"kind": "coupled_strips", "d1": 1.0, "d2": 1.0, "ell": 1.0},
        "solver": {"h": 1 / 16, "seed": 1234, "sector": "ee", "S": 16.0},
        "units": {"m": 0.0, "c": 1.0, "hbar": 1.0},
        "study": {"parameter": "ell", "values": [0.375, 0.5, 0.625, 0.75],
                  "expected_exponent": 4},
    }
    payload = cli.cmd_study(cfg, str(tmp_path))
    assert (tmp_path / "study.json").exists()
    assert (tmp_path / "study.csv").exists()
    assert (tmp_path / "study.png").exists()
    assert len(payload["points"]) == 4
    assert payload["fit"] is not None
    gaps = [p["gap"] for p in payload["points"]]
    assert gaps == sorted(gaps)
    for p in payload["points"]:
        assert p["count_lo"] <= p["count"] <= p["count_hi"]


def test_study_requires_sweep(tmp_path):
    cfg = lshape_config()
    with pytest.raises(cli.ConfigError):
        cli.cmd_study(cfg, str(tmp_path))


def test_main_exit_codes(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["solve", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    cfg = tmp_path / "badkind.json"
    cfg.write_text(json.dumps({"domain": {"kind": "mystery"}, "solver": {"h": 0.1}}))
    assert cli.main(["solve", "--config", cfg.as_posix(),
                     "--out", str(tmp_path / "o2")]) == 2
    assert (tmp_path / "o2" / "error.json").exists()
    rec = json.loads((tmp_path / "o2" / "error.json").read_text())
    assert rec["error"] == "config_error"


def test_main_solve_roundtrip(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(lshape_config()))
    code = cli.main(["solve", "--config", str(cfg), "--out",
                     str(tmp_path / "run"), "--format", "json", "--no-figures",
                     "--seed", "42"])
    assert code == 0
    doc = json.loads((tmp_path / "run" / "result.json").read_text())
    assert doc["solver"]["seed"] == 42


def test_validate_passes_and_corrupt_fails():
    code, results = cli.cmd_validate(None, corrupt=False)
    assert code == 0 and all(r["passed"] for r in results)
    code, results = cli.cmd_validate(None, corrupt=True)
    assert code == 3
    failed = [r["name"] for r in results if not r["passed"]]
    assert failed == ["stiffness_symmetry"]
