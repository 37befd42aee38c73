import json

import pytest

from qdwalls.exceptions import GoldenMismatchException, SchemaException
from qdwalls.golden import (
    build_golden,
    check_golden,
    diff_golden,
    diff_tables,
    golden_path,
    load_golden,
    regen_golden,
)


@pytest.mark.parametrize("name", ["S3", "D4", "Z2xZ2"])
def test_committed_golden_files_are_current(name):
    assert diff_golden(name) == []


def test_regen_then_diff(tmp_path):
    paths = regen_golden(["S3", "Z2xZ2"], tmp_path)
    assert [path.name for path in paths] == ["S3.json", "Z2xZ2.json"]
    assert diff_golden("S3", tmp_path) == []
    check_golden("Z2xZ2", tmp_path)


def test_corrupted_cell_is_reported(tmp_path):
    regen_golden(["S3"], tmp_path)
    path = golden_path("S3", tmp_path)
    table = json.loads(path.read_text(encoding="utf-8"))
    table["anyons"][2]["dim"] = 3
    path.write_text(json.dumps(table), encoding="utf-8")
    with pytest.raises(GoldenMismatchException) as info:
        check_golden("S3", tmp_path)
    assert info.value.mismatches == [
        {"cell": "anyons[2].dim", "expected": 3, "actual": 2}
    ]


def test_s3_table_contents():
    table = build_golden("S3")
    assert [row["name"] for row in table["anyons"]] == list("ABCDEFHG")
    algebras = {(row["M"], row["N"]): row["algebra"] for row in table["algebras"]}
    assert algebras[("{e,σ}", "{e}")] == "A+C"
    assert table["tunneling"][0]["images"]["C"] == "1+e"


def test_unknown_group():
    with pytest.raises(SchemaException):
        build_golden("Z5")
    with pytest.raises(SchemaException):
        regen_golden(["S3", "Z5"])


def test_load_errors(tmp_path):
    with pytest.raises(SchemaException):
        load_golden(tmp_path / "missing.json")
    stale = tmp_path / "stale.json"
    stale.write_text(json.dumps({"schema_version": "0.1"}))
    with pytest.raises(SchemaException):
        load_golden(stale)
    bare = tmp_path / "bare.json"
    bare.write_text("[]")
    with pytest.raises(SchemaException):
        load_golden(bare)


def test_diff_tables():
    assert diff_tables({"a": [1, 2]}, {"a": [1, 2]}) == []
    assert diff_tables({"a": [1]}, {"a": [1, 5]}) == [
        {"cell": "a[1]", "expected": None, "actual": 5}
    ]
    assert diff_tables({"a": 1}, {"b": 1}) == [
        {"cell": "a", "expected": 1, "actual": None},
        {"cell": "b", "expected": None, "actual": 1},
    ]
