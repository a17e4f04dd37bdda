import json
import math
import subprocess
import sys

import numpy as np
import pytest

from fracdim import io
from fracdim.cli import main
from fracdim.curves import Polyline
from fracdim.errors import OutputError, SchemaError
from fracdim.oracle import ValidationRow


# serialization

def test_float_text_round_trips_and_stays_float():
    for x in (0.1, 1.0 / 3.0, 1e-300, 2.0**60, 5.0, -0.0):
        text = io.dumps({"v": x})
        back = json.loads(text)["v"]
        assert isinstance(back, float) and back == x
    assert io.dumps({"v": math.nan}) == '{\n  "v": null\n}\n'
    assert io.dumps([1, 2.0]) == "[1, 2.0]\n"


def test_dumps_is_deterministic_and_ordered():
    row = ValidationRow("chirp", (0.5, 1.0), 1.25, 1.2562, 0.0062, True, 0.05, (3, 9))
    a = io.dumps({"rows": [row], "z": 1, "a": np.float64(0.5)})
    b = io.dumps({"rows": [row], "z": 1, "a": np.float64(0.5)})
    assert a == b
    doc = json.loads(a)
    assert list(doc) == ["rows", "z", "a"]
    assert list(doc["rows"][0])[:6] == ["family", "params", "theoretical", "estimated",
                                         "abs_error", "pass"]
    assert doc["rows"][0]["pass"] is True


def test_polyline_csv_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(5)
    c = Polyline(rng.normal(size=(200, 2)))
    path = tmp_path / "c.csv"
    io.write_polyline_csv(path, c)
    back = io.read_polyline_csv(path)
    assert np.array_equal(back.points, c.points)


def test_csv_reader_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n0,0\n1,1\n")
    with pytest.raises(SchemaError):
        io.read_polyline_csv(bad)
    bad.write_text("x,y\n0,0\n1,oops\n")
    with pytest.raises(SchemaError):
        io.read_polyline_csv(bad)
    with pytest.raises(OutputError):
        io.read_polyline_csv(tmp_path / "missing.csv")


def test_read_json_errors(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(SchemaError):
        io.read_json(p)
    with pytest.raises(OutputError):
        io.read_json(tmp_path / "none.json")


# cli

def run(*args):
    return main([str(a) for a in args])


def test_generate_then_dim_on_the_file(tmp_path):
    assert run("generate", "--family", "spiral", "--alpha", 0.5, "--phi-end", 300,
               "--max-segment", 1e-4, "--out", tmp_path) == 0
    meta = json.loads((tmp_path / "curve.meta.json").read_text())
    pts = io.read_polyline_csv(tmp_path / "curve.csv")
    assert meta["n_points"] == len(pts)
    assert run("dim", "--input", tmp_path / "curve.csv", "--out", tmp_path, "--format", "csv",
               "--plot") == 0
    rep = json.loads((tmp_path / "dim.json").read_text())
    assert 1.0 <= rep["estimate"]["dimension"] <= 2.0
    assert (tmp_path / "dim.csv").read_text().startswith("eps,count\n")
    assert (tmp_path / "dim.svg").read_text().startswith("<svg")


def test_generate_json_format(tmp_path):
    assert run("generate", "--family", "chirp", "--alpha", 0.5, "--tau-min", 0.01,
               "--format", "json", "--out", tmp_path) == 0
    doc = json.loads((tmp_path / "curve.json").read_text())
    assert len(doc["x"]) == doc["n_points"] == len(doc["y"])


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "g.json"
    cfg.write_text(json.dumps({"family": "chirp", "alpha": 0.5, "tau_min": 0.1}))
    assert run("generate", "--config", cfg, "--tau-min", 0.01, "--out", tmp_path) == 0
    x = io.read_polyline_csv(tmp_path / "curve.csv").x
    assert x[0] == 0.01


@pytest.mark.parametrize("args", [
    ["generate", "--family", "spiral", "--alpha", "-1"],
    ["generate", "--family", "spiral"],
    ["generate", "--family", "spiral", "--alpha", "0.5", "--bogus", "1"],
    ["validate", "--alphas", ""],
    ["dim"],
    [],
])
def test_schema_errors_exit_one(args, tmp_path):
    assert main(args + ["--out", str(tmp_path)] if args else args) == 1


def test_unknown_config_key_exits_one(tmp_path):
    cfg = tmp_path / "g.json"
    cfg.write_text(json.dumps({"family": "chirp", "alpha": 0.5, "colour": "red"}))
    assert run("generate", "--config", cfg) == 1


def test_missing_input_exits_four(tmp_path):
    assert run("dim", "--input", tmp_path / "nope.csv", "--out", tmp_path) == 4


def test_unwritable_output_exits_four(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run("generate", "--family", "chirp", "--alpha", 0.5, "--tau-min", 0.1,
               "--out", blocker / "sub") == 4


def test_oversized_request_exits_three(tmp_path):
    assert run("generate", "--family", "chirp", "--alpha", 0.5, "--tau-min", 1e-13,
               "--out", tmp_path) == 3


def test_analyze_outputs(tmp_path):
    assert run("analyze", "wavy", "--alpha", 0.5, "--count", 12, "--out", tmp_path,
               "--format", "csv") == 0
    assert (tmp_path / "wavy.csv").read_text().startswith("k,t_odd,t_even,osc")
    assert run("analyze", "phase-asymptotic", "--alpha", 0.5, "--t-max", 500, "--n-grid", 5001,
               "--out", tmp_path) == 0
    assert json.loads((tmp_path / "phase-asymptotic.json").read_text())
    assert run("analyze", "criterion", "--alpha", 0.5, "--k-max", 2000, "--k-last", 12,
               "--out", tmp_path) == 0
    assert json.loads((tmp_path / "criterion.json").read_text())


def test_validate_failure_exits_two_and_writes_rows(tmp_path):
    cfg = tmp_path / "v.json"
    cfg.write_text(json.dumps({"family": "spiral", "alphas": [0.5],
                               "settings": {"k_last": 5, "phi_end": 100.0}}))
    assert run("validate", "--config", cfg, "--out", tmp_path, "--format", "csv") == 2
    doc = json.loads((tmp_path / "validation.json").read_text())
    assert doc["all_pass"] is False and doc["rows"][0]["pass"] is False
    assert "InsufficientResolutionError" in doc["rows"][0]["reason"]
    assert (tmp_path / "validation.csv").exists()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "fracdim.cli", "generate", "--family", "chirp",
                           "--alpha", "0.5", "--tau-min", "0.1", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("points ")
