import json
from pathlib import Path

import numpy as np
import pytest

from fracheat import io
from fracheat.cli import main

from conftest import build_spectrum

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _run(tmp_path, raw, name="run"):
    cfg = tmp_path / f"{name}.json"
    cfg.write_text(json.dumps(raw))
    out = tmp_path / f"{name}-out"
    code = main(["--config", str(cfg), "--out", str(out)])
    report = json.loads((out / "report.json").read_text()) if (out / "report.json").exists() else None
    return code, out, report


def test_spectrum_run(tmp_path, capsys):
    code, out, report = _run(tmp_path, {"kind": "spectrum", "n": 512, "q": 0.5})
    assert code == 0
    cols = io.read_table(out / "spectrum.csv", ["k", "lambda", "phi_at_q"])
    assert cols["lambda"][0] == pytest.approx(1.1578, abs=2e-3)
    assert report["status"] == "ok" and report["exit_code"] == 0
    assert report["parameters"]["n"] == 512
    assert "timings" in report and report["timings"]["total"] > 0
    assert "spectrum: ok" in capsys.readouterr().out


def test_outputs_are_byte_identical(tmp_path):
    raw = {"kind": "forward", "n": 32, "M": 20, "phi": "1-x^2", "f": "x*t", "p": "0.1", "q": 0.2}
    _, a, _ = _run(tmp_path, raw, "a")
    _, b, _ = _run(tmp_path, raw, "b")
    for name in ("field.csv", "observation.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_forward_outputs(tmp_path):
    code, out, report = _run(tmp_path, {"kind": "forward", "n": 32, "M": 20, "phi": "1-x^2",
                                        "q": 0.0, "omega": "1"})
    assert code == 0
    assert (out / "field.csv").read_text().startswith("x,t,u\n")
    assert (out / "observation.csv").read_text().startswith("t,value\n")
    assert (out / "weighted.csv").exists()


def test_example_config_nonlocal(tmp_path):
    out = tmp_path / "nl"
    assert main(["--config", str(CONFIGS / "nonlocal_closed_form.json"), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["diagnostics"]["residual"] <= 1e-2
    assert report["diagnostics"]["r_error_sup_relative"] <= 1e-2
    cols = io.read_table(out / "coefficient.csv", ["t", "r", "p"])
    assert cols["t"].shape == (801,)


def test_point_datum_from_csv(tmp_path):
    out = tmp_path / "pd"
    assert main(["--config", str(CONFIGS / "point_datum_decay.json"), "--out", str(out),
                 "--threads", "2"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["diagnostics"]["p_error_sup"] <= 1e-3
    assert report["parameters"]["threads"] == 2


def test_source_and_double_kinds(tmp_path):
    code, out, _ = _run(tmp_path, {"kind": "invert-source", "n": 64, "M": 10,
                                   "phi": "(1-x^2)^2", "psi": "0.5*(1-x^2)^2"}, "src")
    assert code == 0
    assert (out / "source.csv").read_text().startswith("x,f\n")
    code, out, report = _run(tmp_path, {"kind": "invert-double", "L": 20, "N": 256, "M": 40,
                                        "q": 0, "phi": "exp(-x^2)", "f": "exp(-x^2)*(1+t)",
                                        "p_true": "sin(t)"}, "dbl")
    assert code == 0
    for name in ("coefficient.csv", "w1.csv", "w2.csv"):
        assert (out / name).exists()


def test_usage_error_exit_code(tmp_path, capsys):
    code, out, report = _run(tmp_path, {"kind": "spectrum", "s": 1.5})
    assert code == 1
    assert "'s'" in capsys.readouterr().err
    assert main([]) == 1
    assert main(["--bogus"]) == 1
    assert main(["--config", str(tmp_path / "none.json")]) == 1


def test_assumption_exit_code(tmp_path):
    code, out, report = _run(tmp_path, {"kind": "invert-single", "n": 32, "M": 20, "q": 0.5,
                                        "phi": {"eigenfunction": 1}, "f": 1, "w": 5})
    assert code == 3
    assert report["status"] == "error"
    assert report["diagnostics"]["violated_assumption"] == "(iii)"


def test_numerical_failure_exit_code(tmp_path):
    code, _, report = _run(tmp_path, {"kind": "forward", "n": 15, "M": 4, "phi": "1/x"})
    assert code == 2
    assert report["exit_code"] == 2


def test_csv_node_input(tmp_path):
    sp = build_spectrum(0.5, 16)
    io.write_source(tmp_path / "phi.csv", sp.grid.nodes, np.cos(sp.grid.nodes))
    code, out, _ = _run(tmp_path, {"kind": "forward", "n": 16, "M": 4, "phi": {"csv": "phi.csv"}})
    assert code == 0
    field = io.read_table(out / "field.csv", ["x", "t", "u"])
    np.testing.assert_allclose(field["u"][:16], np.cos(sp.grid.nodes), rtol=1e-12)
