import csv
import json
import subprocess
import sys

import pytest

from polyprog.cli import run


def rows(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def value(path, quantity):
    return next(r["value"] for r in rows(path) if r["quantity"] == quantity)


def test_localfactor_sum_of_squares(tmp_path):
    assert run(["localfactor", "--p", "5", "--poly", "x^2+1", "--out", str(tmp_path)]) == 0
    assert value(tmp_path / "localfactor.csv", "c_p") == "2/5"


def test_header_comments_and_json_mirror(tmp_path):
    assert run(["localfactor", "--p", "7", "--poly", "x^2+1", "--poly", "x+3", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "localfactor.csv").read_text()
    assert text.startswith("# schema_version=1\n# command=localfactor\n")
    doc = json.loads((tmp_path / "localfactor.json").read_text())
    assert doc["rows"] == rows(tmp_path / "localfactor.csv")
    assert "written_at" in json.loads((tmp_path / "localfactor.meta.json").read_text())


def test_bad_arguments_exit_2(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        run(["no-such-command"])
    assert info.value.code == 2
    assert run(["localfactor", "--p", "1", "--out", str(tmp_path)]) == 2
    assert run(["localfactor", "--seed", "-1", "--out", str(tmp_path)]) == 2


def test_pet_first_step(tmp_path):
    assert run(["pet-linearize", "--polys", "0; m; m^2", "--out", str(tmp_path)]) == 0
    got = {r["quantity"]: r["value"] for r in rows(tmp_path / "pet-linearize.csv")}
    assert got["d"] == "3" and got["t"] == "4"
    assert "3*: m^2 + 2*m*h1 + h1^2" in got.values()


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("localfactor.p = 3\nlocalfactor.poly = x^2+1\n")
    assert run(["localfactor", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert value(tmp_path / "localfactor.csv", "c_p") == "0"
    assert run(["localfactor", "--config", str(cfg), "--p", "5", "--out", str(tmp_path)]) == 0
    assert value(tmp_path / "localfactor.csv", "c_p") == "2/5"


@pytest.mark.parametrize("argv", [
    ["classify-primes"],
    ["count-progressions", "--N", "500", "--M", "10"],
    ["gowers-norm", "--N", "32"],
])
def test_commands_are_byte_reproducible(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(argv + ["--out", str(a)]) == 0
    assert run(argv + ["--out", str(b)]) == 0
    name = argv[0]
    assert (a / f"{name}.csv").read_bytes() == (b / f"{name}.csv").read_bytes()
    assert (a / f"{name}.json").read_bytes() == (b / f"{name}.json").read_bytes()


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "polyprog", "localfactor", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert out.returncode == 0
