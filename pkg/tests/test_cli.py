import csv
import json
import math

import pytest

from spincauchy import suite
from spincauchy.cli import main
from spincauchy.io import read_spgrid, write_json, write_spgrid


def test_list_checks(capsys):
    assert main(["list-checks"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == len(suite.CHECKS)
    assert out[0].startswith("clifford_relations")


def test_verify_algebra_report(tmp_path):
    rep = tmp_path / "alg.json"
    assert main(["verify-algebra", "--nmax", "4", "--report", str(rep)]) == 0
    data = json.loads(rep.read_text())
    assert data["pass"] and {c["n"] for c in data["checks"]} == {1, 2, 3, 4}


def test_identities_csv(tmp_path):
    table = tmp_path / "res.csv"
    code = main(["identities", "--which", "dirac_wang_parallel,dirac_wang_general", "--grid", "8,16",
                 "--csv", str(table), "--report", str(tmp_path / "r.json")])
    assert code == 0
    rows = list(csv.reader(table.open()))
    assert rows[0] == ["identity", "grid", "residual_rel", "residual_abs"]
    assert [r[:2] for r in rows[1:]] == [["dirac_wang_parallel", "8"], ["dirac_wang_parallel", "16"],
                                         ["dirac_wang_general", "8"], ["dirac_wang_general", "16"]]


def test_unknown_identity_is_a_config_error(capsys):
    assert main(["identities", "--which", "nonsense"]) == 2
    assert "unknown identities" in capsys.readouterr().err


@pytest.mark.parametrize(
    "flags",
    [
        ["--scenario", "cone", "--m", "2", "--grid", "8", "--s", "0:1:16"],
        ["--scenario", "generic", "--m", "2", "--grid", "8", "--s", "0:1:24", "--f", "0.5*sin(3*s)", "--tol", "1e-8"],
        ["--scenario", "rotating", "--m", "2", "--grid", "8", "--nodes", "16", "--lift", "-1", "--tol", "1e-8"],
    ],
)
def test_construct_then_verify(tmp_path, flags):
    out = tmp_path / "psi.spgrid"
    assert main(["construct", *flags, "--out", str(out)]) == 0
    values, kind, meta = read_spgrid(out)
    assert kind == "spinor" and meta["config"]["scenario"] == flags[1]
    rep = tmp_path / "v.json"
    assert main(["verify", str(out), "--report", str(rep)]) == 0
    report = json.loads(rep.read_text())
    assert report["pass"] and "consequences" in report


def test_verify_fails_on_corrupted_values(tmp_path):
    out = tmp_path / "psi.spgrid"
    assert main(["construct", "--scenario", "cone", "--m", "2", "--grid", "8", "--s", "0:1:16", "--out", str(out)]) == 0
    values, _, meta = read_spgrid(out)
    values[0, 0, 3] *= 1.5
    write_spgrid(out, values, values.shape[:-1], "spinor", meta)
    assert main(["verify", str(out), "--no-consequences", "--report", str(tmp_path / "v.json")]) == 1


def test_verify_missing_file():
    assert main(["verify", "/nonexistent/file.spgrid"]) == 2


def test_construct_config_errors(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    write_json(cfg, {"scenario": "cone", "bogus": 1})
    assert main(["construct", "--config", str(cfg)]) == 2
    assert main(["construct", "--scenario", "generic", "--f", "__import__('os').getcwd()"]) == 2
    assert main(["construct", "--scenario", "generic", "--f", "s.real"]) == 2
    assert main(["construct", "--m", "2"]) == 2
    err = capsys.readouterr().err
    assert err.count("invalid configuration") == 4


def test_parse_expression():
    f = suite.parse_expression("0.5*sin(3*s) + s**2")
    assert abs(f(0.2) - (0.5 * math.sin(0.6) + 0.04)) < 1e-15
    assert suite.parse_expression("2") == 2.0
    with pytest.raises(ValueError):
        suite.parse_expression("open('x')")
    with pytest.raises(ValueError):
        suite.parse_interval("0:1")


def test_holonomy_command(tmp_path):
    rep = tmp_path / "h.json"
    assert main(["holonomy", "--scenario", "rotating", "--m", "2", "--nodes", "16", "--report", str(rep)]) == 0
    data = json.loads(rep.read_text())
    assert [x["lift"] for x in data["lifts"]] == [1, -1]
    assert main(["holonomy", "--scenario", "cone"]) == 2


def test_gauge_fix_command(tmp_path):
    table = tmp_path / "g.csv"
    fixed = tmp_path / "path.json"
    code = main(["gauge-fix", "--grid", "16", "--csv", str(table), "--out", str(fixed), "--report", str(tmp_path / "g.json")])
    assert code == 0
    rows = list(csv.reader(table.open()))
    assert len(rows) == 17 and float(rows[-1][2]) < 1e-6 < float(rows[-1][1])
    assert "G" in json.loads(fixed.read_text())


def test_run_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    write_json(cfg, {"seed": 1, "extra": True})
    assert main(["run", "--config", str(cfg)]) == 2
    assert "extra" in capsys.readouterr().err


def test_run_small_config(tmp_path):
    cfg = tmp_path / "run.json"
    write_json(cfg, {"algebra": {"nmax": 3}, "scenarios": [{"scenario": "minkowski", "m": 2, "grid": 8, "s": "0:1:8"}]})
    rep = tmp_path / "out.json"
    assert main(["run", "--config", str(cfg), "--seed", "3", "--report", str(rep)]) == 0
    data = json.loads(rep.read_text())
    assert data["seed"] == 3 and set(data["sections"]) == {"algebra", "scenarios"}


def test_verify_accepts_in_flag(tmp_path):
    out = tmp_path / "psi.spgrid"
    assert main(["construct", "--scenario", "cone", "--m", "2", "--grid", "8", "--s", "0:1:16", "--out", str(out)]) == 0
    assert main(["verify", "--in", str(out), "--report", str(tmp_path / "v.json")]) == 0
    assert main(["verify"]) == 2


def test_gauge_fix_reads_a_path(tmp_path):
    fixed = tmp_path / "path.json"
    assert main(["gauge-fix", "--grid", "16", "--out", str(fixed)]) == 0
    rep = tmp_path / "again.json"
    assert main(["gauge-fix", "--in", str(fixed), "--report", str(rep)]) == 0
    assert "divergence_before" in rep.read_text()
