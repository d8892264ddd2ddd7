import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from bergquant import cli
from bergquant.errors import ConfigInvalid


def _run(tmp_path, *args, config=None):
    argv = list(args) + ["--out-dir", str(tmp_path)]
    if config is not None:
        tmp_path.mkdir(parents=True, exist_ok=True)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(config))
        argv += ["--config", str(path)]
    return cli.main(argv)


def test_csv_schema_and_summary(tmp_path):
    assert _run(tmp_path, "ot-check") == 0
    with open(tmp_path / "ot-check.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == cli.COLUMNS
    checks = [r for r in rows[1:] if r[-1] != "info"]
    assert len(checks) == 20
    assert all(r[0] == "ot-check" and r[-1] == "pass" for r in checks)
    summary = json.loads((tmp_path / "ot-check.json").read_text())
    assert summary["passed"] and summary["n_checks"] == 20 and summary["n_failed"] == 0


@pytest.mark.parametrize("name", ["ot-check", "berndtsson"])
def test_reports_are_byte_identical(tmp_path, name):
    cfg = {"pairs": 3, "k_list": [20]} if name == "berndtsson" else None
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run(a, name, "--seed", "7", config=cfg) == 0
    assert _run(b, name, "--seed", "7", "--threads", "3", config=cfg) == 0
    for ext in ("csv", "json"):
        assert (a / f"{name}.{ext}").read_bytes() == (b / f"{name}.{ext}").read_bytes()


def test_unknown_key_exits_2(tmp_path):
    assert _run(tmp_path, "ot-check", config={"a_lst": [1.0]}) == 2
    assert not (tmp_path / "ot-check.csv").exists()


def test_wrong_type_exits_2(tmp_path):
    assert _run(tmp_path, "ot-check", config={"tol": "small"}) == 2


def test_mass_deficient_cdf_exits_2(tmp_path):
    t = np.linspace(-5, 5, 51)
    table = tmp_path / "short.txt"
    np.savetxt(table, np.column_stack((t, 6.0 * (t + 5) / 10)))
    cfg = {"measures": [{"kind": "table", "path": str(table)}], "k_list": [10],
           "round_trip_seeds": 0}
    assert _run(tmp_path, "measure-quantize", config=cfg) == 2


def test_run_takes_subcommand_from_config(tmp_path):
    assert _run(tmp_path, "run", config={"subcommand": "ot-check", "a_list": [1.0]}) == 0
    assert (tmp_path / "ot-check.csv").exists()
    assert _run(tmp_path, "run", config={"subcommand": "nope"}) == 2
    assert _run(tmp_path, "polydisk", config={"subcommand": "ot-check"}) == 2


def test_bad_seed_and_config_file(tmp_path):
    assert _run(tmp_path, "ot-check", "--seed", "-1") == 2
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert cli.main(["ot-check", "--config", str(bad), "--out-dir", str(tmp_path)]) == 2


def test_failing_check_exits_1(tmp_path):
    cfg = {"potentials": [{"kind": "test", "s": 0.5, "c": 1.0}], "k_list": [10, 20]}
    assert _run(tmp_path, "doubling", config=cfg) == 1


def test_strict_turns_warnings_into_failures(tmp_path):
    cfg = {"a_list": [0.5, 2.0], "max_spread": 1.0}
    assert _run(tmp_path, "mt-check", config=cfg) == 0
    assert _run(tmp_path, "mt-check", "--strict", config=cfg) == 1


def test_resolve_config_rejects_unknown_subcommand():
    with pytest.raises(ConfigInvalid):
        cli.resolve_config("nope", None)
    cfg = cli.resolve_config("ot-check", {"seed": 3, "m_list": [0]})
    assert cfg["m_list"] == [0] and "seed" not in cfg


def test_rounding_floor_scales_with_level():
    assert cli.rounding_floor(80) == pytest.approx(16 * np.finfo(float).eps * 80 * 40)


def test_float_formatting_round_trips():
    for x in (math.pi, 1e-300, -2.5e17, 0.1):
        assert float(cli._fmt(x)) == x
    assert cli._fmt(math.nan) == "nan" and cli._fmt(None) == ""


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "bergquant", "ot-check", "--out-dir", str(tmp_path)],
                         capture_output=True, text=True, check=False)
    assert out.returncode == 0
    assert "20 passed" in out.stdout
