import json

import pytest

from qdwalls.cli import main
from qdwalls.const import EXIT_DIAGNOSTIC, EXIT_OK, EXIT_USAGE, LISTED_PRESETS


def run_json(capsys, *argv):
    assert main([*argv, "--json"]) == EXIT_OK
    return json.loads(capsys.readouterr().out)


def test_version(capsys):
    assert main(["--version"]) == EXIT_OK
    assert "qdwalls" in capsys.readouterr().out


def test_groups(capsys):
    rows = run_json(capsys, "groups")
    assert [row["group"] for row in rows] == LISTED_PRESETS
    s3 = next(row for row in rows if row["group"] == "S3")
    assert (s3["order"], s3["anyons"]) == (6, 8)


def test_anyons(capsys):
    rows = run_json(capsys, "anyons", "--group", "S3")
    assert len(rows) == 8
    assert [row["dim"] for row in rows] == [1, 1, 2, 3, 3, 2, 2, 2]


def test_condense_text(capsys):
    assert main(["condense", "--group", "S3", "--M", "σ", "--N", "e"]) == EXIT_OK
    assert "A+C" in capsys.readouterr().out


def test_tunnel_trivial_group(capsys):
    payload = run_json(capsys, "tunnel", "--group", "Z1", "--left", "G", "--right", "G")
    assert payload["matrix"] == [[1]]


def test_floquet_graph(capsys):
    graph = run_json(capsys, "floquet", "graph", "--group", "D4", "--quotient", "Z2")
    assert len(graph["nodes"]) == 11
    assert len(graph["edges"]) == 18
    argv = ["floquet", "graph", "--group", "D4", "--quotient", "Z2"]
    assert main([*argv, "--format", "dot"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("graph transitions {")


def test_floquet_graph_listed_phases(capsys):
    listed = "G/r;G/r2,s;G/r2,sr;r/r2;r2,s/r2;r2,sr/r2;r2/e;s/e;sr/e;sr2/e"
    argv = ["floquet", "graph", "--group", "D4", "--quotient", "Z2"]
    graph = run_json(capsys, *argv, "--phases", listed)
    assert len(graph["nodes"]) == 10
    assert len(graph["edges"]) == 15
    assert main([*argv, "--phases", "r/e"]) == EXIT_DIAGNOSTIC
    assert json.loads(capsys.readouterr().out)["error"] == "SchemaException"


def test_floquet_check(capsys):
    argv = ["floquet", "check", "--group", "Z2xZ2", "--quotient", "Z2"]
    assert main([*argv, "--nodes", "4,3,5,1,6,2,4"]) == EXIT_OK
    assert "automorphism=True" in capsys.readouterr().out
    assert main(argv) == EXIT_DIAGNOSTIC
    report = json.loads(capsys.readouterr().out)
    assert report["error"] == "SchemaException"


@pytest.mark.parametrize(
    "argv",
    [["nope"], ["anyons"], ["anyons", "--group", "S3", "--tol", "1"]],
    ids=["unknown-command", "missing-group", "bad-tolerance"],
)
def test_usage_errors(argv):
    assert main(argv) == EXIT_USAGE


def test_unknown_group_is_a_diagnostic(capsys):
    assert main(["anyons", "--group", "Q8"]) == EXIT_DIAGNOSTIC
    assert json.loads(capsys.readouterr().out)["error"] == "InvalidGroupException"


def test_golden_regen_and_diff(tmp_path, capsys):
    assert main(["golden", "regen", "S3", "--dir", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "S3.json").is_file()
    capsys.readouterr()
    assert main(["golden", "diff", "S3", "--dir", str(tmp_path)]) == EXIT_OK
    assert "S3: 0 mismatching cells" in capsys.readouterr().out


def test_mtc_check_builtin(capsys):
    report = run_json(capsys, "mtc", "check", "--group", "Z2")
    assert report["labels"] == ["1", "e", "m", "f"]
    assert report["pentagon_residual"] < 1e-12


def test_mtc_wall(tmp_path, capsys):
    assert main(["mtc", "builtin", "--group", "Z2", "--em-wall"]) == EXIT_OK
    wall = tmp_path / "wall.json"
    wall.write_text(capsys.readouterr().out)
    argv = ["mtc", "check", "--group", "Z2", "--wall", str(wall)]
    report = run_json(capsys, *argv, "--u", "e,m,e,m,m,e,m,e")
    assert report["u"]["rows"] == ["f"]
    assert report["u"]["logical_preserving"] is True
    assert main(["mtc", "check", "--group", "Z2", "--u", "e,m"]) == EXIT_DIAGNOSTIC


def test_sim_run(tmp_path, capsys):
    schedule = tmp_path / "schedule.json"
    schedule.write_text(
        json.dumps([["(0,1)", "e"], ["G", "(1,1)"], ["(1,0)", "e"]]),
        encoding="utf-8",
    )
    record = tmp_path / "record.json"
    argv = ["sim", "run", "--group", "Z2xZ2", "--schedule", str(schedule)]
    assert main([*argv, "--record", str(record), "--seed", "4"]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "step,source,target,legal,fidelity,min_stabilizer"
    assert len(lines) == 3
    assert all(line.split(",")[3] == "1" for line in lines[1:])
    assert json.loads(record.read_text(encoding="utf-8"))["seed"] == 4
