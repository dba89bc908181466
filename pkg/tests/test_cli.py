import csv
import json
import subprocess
import sys
from importlib import resources

import pytest
from jsonschema import Draft202012Validator
from referencing import Registry, Resource

from ychannel.cli import main, parse_power_grid, UsageError


def _registry():
    folder = resources.files("ychannel") / "schemas"
    docs = {p.name: json.loads(p.read_text()) for p in folder.iterdir() if p.name.endswith(".json")}
    return docs, Registry().with_resources((k, Resource.from_contents(v)) for k, v in docs.items())


SCHEMAS, REGISTRY = _registry()


def validate(obj, schema):
    Draft202012Validator(SCHEMAS[schema], registry=REGISTRY).validate(obj)


def run(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() and out.is_file() else None)


def test_schemas_are_valid():
    for doc in SCHEMAS.values():
        Draft202012Validator.check_schema(doc)


class TestRegion:
    def test_eighteen_halfspaces(self, tmp_path):
        code, obj = run(tmp_path, "region", "--config", "3,2,2,4")
        assert code == 0 and len(obj["halfspaces"]) == 18
        validate(obj, "region.schema.json")

    def test_vertices(self, tmp_path):
        code, obj = run(tmp_path, "region", "--config", "1,1,1,1", "--vertices")
        assert code == 0
        assert ["1", "0", "0", "0", "0", "0"] in [v["coords"] for v in obj["vertices"]]
        assert ["1/2", "0", "0", "1/2", "1/2", "0"] in [v["coords"] for v in obj["vertices"]]
        validate(obj, "region.schema.json")

    def test_bad_config(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["region", "--config", "0,1,1,1"])
        assert exc.value.code == 2
        assert "config" in capsys.readouterr().err


class TestCheck:
    def test_anchor(self, tmp_path):
        code, obj = run(tmp_path, "check", "--config", "3,2,2,4", "--dof", "2,0,0,2,2,0")
        assert code == 0 and obj["pass"]
        assert obj["plan"]["case"] == "I" and obj["plan"]["J"] == 4 and obj["plan"]["gamma"] == 2
        validate(obj, "check.schema.json")

    def test_origin(self, tmp_path):
        code, obj = run(tmp_path, "check", "--config", "2,2,2,3", "--dof", "0,0,0,0,0,0")
        assert code == 0 and obj["pass"] and obj["plan"]["J"] == 0
        validate(obj, "check.schema.json")

    def test_outside(self, tmp_path):
        code, obj = run(tmp_path, "check", "--config", "1,1,1,1", "--dof", "2,0,0,0,0,0")
        assert code == 1 and not obj["pass"]
        assert "source(1)" in [v["tag"] for v in obj["violated"]]
        validate(obj, "check.schema.json")

    def test_float_rejected(self):
        with pytest.raises(SystemExit) as exc:
            main(["check", "--config", "1,1,1,1", "--dof", "0.5,0,0,0,0,0"])
        assert exc.value.code == 2


class TestVerify:
    @pytest.mark.parametrize("config,d", [
        ("3,2,2,4", "2,0,0,2,2,0"),
        ("2,1,2,3", "1,1,0,1,0,0"),
        ("1,1,1,1", "1/2,0,0,1/2,1/2,0"),
    ])
    def test_pass(self, tmp_path, config, d):
        code, obj = run(tmp_path, "verify", "--config", config, "--dof", d, "--seed", "4")
        assert code == 0 and obj["pass"]
        assert [v["subject"] for v in obj["verdicts"]] == ["membership", "rank_audit", "end_to_end"]
        validate(obj, "verify.schema.json")

    def test_outside(self, tmp_path):
        code, obj = run(tmp_path, "verify", "--config", "1,1,1,1", "--dof", "2,0,0,0,0,0")
        assert code == 1 and obj["verdicts"][0]["witness"] == "source bound user 1"
        validate(obj, "verify.schema.json")

    def test_saves_containers(self, tmp_path):
        from ychannel.channel import ChannelRealization
        from ychannel.io import read_matrices

        ch, de = tmp_path / "ch.ycm", tmp_path / "de.ycm"
        code, _ = run(tmp_path, "verify", "--config", "3,2,2,4", "--dof", "2,0,0,2,2,0",
                      "--save-channel", str(ch), "--save-design", str(de))
        assert code == 0
        assert ChannelRealization.load(ch).config.N == 4
        assert "W" in read_matrices(de)[1]


class TestSimulate:
    def test_noiseless(self, tmp_path):
        out = tmp_path / "sim"
        code = main(["simulate", "--config", "3,2,2,4", "--dof", "2,0,0,2,2,0", "--trials", "100",
                     "--out", str(out)])
        assert code == 0
        report = json.loads((out / "noiseless_report.json").read_text())
        validate(report, "montecarlo.schema.json")
        assert report["n_recovered"] == 100
        rows = list(csv.DictReader((out / "noiseless.csv").open()))
        assert len(rows) == 100 and all(r["recovered"] == "1" for r in rows)

    def test_rates_grid(self, tmp_path):
        out = tmp_path / "rates"
        code = main(["simulate", "--config", "2,1,2,3", "--dof", "1,1,0,1,0,0", "--trials", "3",
                     "--mode", "rates", "--power-grid", "40:10:60", "--out", str(out)])
        assert code == 0
        validate(json.loads((out / "rates_report.json").read_text()), "montecarlo.schema.json")
        rows = list(csv.DictReader((out / "rates.csv").open()))
        assert [float(r["P_dB"]) for r in rows] == [40.0, 50.0, 60.0]

    def test_same_seed_same_bytes(self, tmp_path):
        args = ["simulate", "--config", "2,2,2,3", "--dof", "1,1,1,1,1,1", "--trials", "5", "--seed", "9"]
        main([*args, "--out", str(tmp_path / "a")])
        main([*args, "--out", str(tmp_path / "b")])
        for f in ("noiseless.csv", "noiseless_report.json"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_outside_region_is_usage_error(self, tmp_path):
        code = main(["simulate", "--config", "1,1,1,1", "--dof", "2,0,0,0,0,0", "--out", str(tmp_path)])
        assert code == 2

    def test_tolerance_flag(self, tmp_path):
        out = tmp_path / "tol"
        main(["simulate", "--config", "3,2,2,4", "--dof", "2,0,0,2,2,0", "--trials", "2",
              "--tolerance", "1e-30", "--out", str(out)])
        report = json.loads((out / "noiseless_report.json").read_text())
        assert report["n_recovered"] == 0  # nothing is exact to 1e-30

    def test_bad_grid(self):
        with pytest.raises(UsageError):
            parse_power_grid("40")
        assert parse_power_grid("40:10:60") == [40.0, 50.0, 60.0]
        assert parse_power_grid("10,20") == [10.0, 20.0]


def test_region_json_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["region", "--config", "4,3,2,5", "--vertices", "--out", str(a)])
    main(["region", "--config", "4,3,2,5", "--vertices", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("cmd,flags", [
    ("region", ["--config", "--out", "--vertices"]),
    ("check", ["--config", "--dof", "--out"]),
    ("verify", ["--config", "--dof", "--seed", "--tolerance", "--out"]),
    ("simulate", ["--config", "--dof", "--seed", "--trials", "--power-grid", "--out", "--tolerance"]),
])
def test_help_documents_flags(cmd, flags):
    proc = subprocess.run([sys.executable, "-m", "ychannel", cmd, "--help"],
                          capture_output=True, text=True, check=True)
    for f in flags:
        assert f in proc.stdout


def test_missing_command_is_usage_error():
    proc = subprocess.run([sys.executable, "-m", "ychannel"], capture_output=True, text=True)
    assert proc.returncode == 2
