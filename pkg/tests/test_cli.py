import csv
import io
import json
import subprocess
import sys

import jsonschema
import pytest

from skewbm.cli import SCHEMA_COMMANDS, fmt_float, load_schema, main, parse_grid


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def validated(command, text):
    doc = json.loads(text)
    jsonschema.validate(doc, load_schema(command))
    return doc


FIG1 = ["--sigma1", "0.5", "--sigma2", "0.9"]


def test_price_json(capsys):
    code, out, _ = run(["price", *FIG1, "--s0", "1", "--strike", "1.2", "--t", "2", "--kind", "call"], capsys)
    assert code == 0
    doc = validated("price", out)
    assert doc["price"] == pytest.approx(0.27081294218876983, abs=1e-15)
    assert doc["method"] == "closed_form"
    assert doc["err_estimate"] >= 0


@pytest.mark.parametrize("engine", ["generic", "bs_approx", "bs_approx_adjusted"])
def test_price_engines(engine, capsys):
    code, out, _ = run(["price", *FIG1, "--s0", "1", "--strike", "1.2", "--t", "2", "--engine", engine], capsys)
    assert code == 0
    assert abs(validated("price", out)["price"] - 0.2708) < 0.01


def test_price_mc(capsys):
    argv = ["price", *FIG1, "--s0", "1", "--strike", "1.2", "--t", "2", "--engine", "mc", "--paths", "20000",
            "--steps", "500", "--seed", "3"]
    code, out, _ = run(argv, capsys)
    doc = validated("price", out)
    assert code == 0 and doc["std_error"] > 0


def test_price_displaced(capsys):
    argv = ["price", *FIG1, "--alpha1", "0.4", "--s0", "0.8", "--strike", "1.3", "--t", "2", "--engine", "displaced"]
    code, out, _ = run(argv, capsys)
    assert code == 0
    assert validated("price", out)["price"] == pytest.approx(0.09140710326081485, abs=1e-10)


def test_price_barrier_scaling(capsys):
    # S* = 2 with every level doubled prices twice the S* = 1 contract
    argv = ["price", *FIG1, "--s0", "2", "--strike", "2.4", "--t", "2", "--barrier", "2"]
    code, out, _ = run(argv, capsys)
    assert code == 0
    assert validated("price", out)["price"] == pytest.approx(2 * 0.27081294218876983, rel=1e-14)


def test_price_csv(capsys):
    code, out, _ = run(["price", *FIG1, "--s0", "1", "--strike", "0.7", "--t", "2", "--kind", "put",
                        "--format", "csv"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and rows[0]["method"] == "parity"


def test_smile_flat(capsys):
    code, out, _ = run(["smile", "--sigma1", "0.5", "--sigma2", "0.5", "--t", "2", "--strikes", "0.5:2:0.25"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert list(rows[0]) == ["strike", "price", "implied_vol", "engine"]
    assert len(rows) == 7
    assert all(abs(float(r["implied_vol"]) - 0.5) < 1e-6 for r in rows)


def test_smile_shape(capsys):
    code, out, _ = run(["smile", "--engine", "exact", *FIG1, "--t", "2", "--strikes", "0.5:2:0.125"], capsys)
    ivs = [float(r["implied_vol"]) for r in csv.DictReader(io.StringIO(out))]
    assert code == 0 and len(ivs) == 13
    assert all(b < a for a, b in zip(ivs, ivs[1:]))


def test_smile_json(capsys):
    code, out, _ = run(["smile", *FIG1, "--t", "2", "--strikes", "0.8,1,1.2", "--format", "json",
                        "--engine", "bs_approx_adjusted"], capsys)
    assert code == 0
    assert len(validated("smile", out)["rows"]) == 3


def test_density(capsys):
    argv = ["density", "--which", "phi", "--p", "0.642857", "--t", "2", "--m1", "-0.25", "--m2", "-0.45",
            "--tau", "0.5,1", "--v", "0.2", "--x=-0.5,0.5", "--l", "0.3", "--format", "json"]
    code, out, _ = run(argv, capsys)
    doc = validated("density", out)
    assert code == 0
    assert doc["columns"] == ["tau", "v", "x", "l", "value"]
    assert len(doc["rows"]) == 4


def test_density_trivariate_csv(capsys):
    code, out, _ = run(["density", "--which", "trivariate", "--p", "0.5", "--t", "1", "--v", "0.5",
                        "--x", "0.2", "--l", "0.4"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["u", "x", "l", "value"] and len(rows) == 2


def test_simulate_byte_identical(tmp_path):
    args = [sys.executable, "-m", "skewbm.cli", "simulate", "--p", "0.6", "--paths", "500", "--steps", "200",
            "--seed", "9", "--workers", "2"]
    a = subprocess.run(args, capture_output=True, check=True).stdout
    b = subprocess.run(args, capture_output=True, check=True).stdout
    assert a == b and a.count(b"\n") == 501
    assert b"\r" not in a


def test_simulate_json(capsys):
    code, out, _ = run(["simulate", "--p", "0.6", "--paths", "50", "--steps", "100", "--format", "json"], capsys)
    assert code == 0 and len(validated("simulate", out)["paths"]["tau"]) == 50
    code, out, _ = run(["simulate", "--p", "0.6", "--paths", "50", "--steps", "100", "--format", "json",
                        "--summary"], capsys)
    assert code == 0 and set(validated("simulate", out)["summary"]) == {"tau", "v", "u", "l", "x_T"}


def test_approx(capsys, tmp_path):
    target = tmp_path / "approx.json"
    code, out, _ = run(["approx", *FIG1, "--strike", "1.25", "--t", "2", "-o", str(target)], capsys)
    assert code == 0 and out == ""
    doc = validated("approx", target.read_text(encoding="utf-8"))
    assert doc["call_adjusted"] == 0.25212673026390037


def test_validate_schema():
    schema = load_schema("validate")
    doc = {"schema_version": "1.0", "command": "validate", "passed": True,
           "checks": [{"name": "x", "passed": True, "value": 0.0, "reference": None, "tolerance": 1e-8,
                       "seconds": 0.1, "detail": ""}]}
    jsonschema.validate(doc, schema)


@pytest.mark.parametrize("command", SCHEMA_COMMANDS)
def test_schemas_are_valid(command):
    schema = load_schema(command)
    jsonschema.Draft7Validator.check_schema(schema)
    assert schema["properties"]["schema_version"]["const"] == "1.0"


@pytest.mark.parametrize("argv", [
    ["price", *FIG1, "--s0", "-1", "--strike", "1.2", "--t", "2"],
    ["price", *FIG1, "--s0", "1", "--strike", "1.2"],
    ["smile", *FIG1, "--t", "2", "--strikes", "2,1"],
    ["smile", *FIG1, "--t", "2", "--strikes", "1:2"],
    ["smile", *FIG1, "--t", "2", "--strikes", "0,1"],
    ["price", *FIG1, "--s0", "1", "--strike", "1.2", "--t", "2", "--engine", "magic"],
])
def test_bad_flags(argv, capsys):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2


@pytest.mark.parametrize("argv", [
    ["price", *FIG1, "--s0", "1.1", "--strike", "1.2", "--t", "2", "--engine", "bs_approx"],
    ["price", *FIG1, "--s0", "1.1", "--strike", "1.3", "--t", "2", "--engine", "displaced"],
    ["density", "--p", "1.5", "--t", "1", "--tau", "0.5", "--v", "0.2", "--x", "0.1", "--l", "0.2"],
    ["simulate", "--p", "0.5", "--m1", "100", "--steps", "100"],
])
def test_domain_errors(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 3 and err.startswith("error:")


def test_grid_parser():
    assert parse_grid("0.5:2:0.5") == [0.5, 1.0, 1.5, 2.0]
    assert parse_grid("1,2.5") == [1.0, 2.5]
    assert fmt_float(0.1) == "0.10000000000000001"
    assert fmt_float(float("nan")) == "null"
