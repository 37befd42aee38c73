import json

import pytest

from qdwalls.config import load_run_config
from qdwalls.const import DEFAULT_ORDER_CAP, DEFAULT_TOLERANCE
from qdwalls.exceptions import SchemaException


def test_defaults():
    config = load_run_config()
    assert config["tolerance"] == DEFAULT_TOLERANCE
    assert config["seed"] == 0
    assert config["format"] == "text"
    assert config["order_cap"] == DEFAULT_ORDER_CAP
    assert config["debug"] is False
    assert "group" not in config


def test_none_overrides_are_ignored():
    config = load_run_config({"group": None, "seed": None, "format": "json"})
    assert "group" not in config
    assert config["seed"] == 0
    assert config["format"] == "json"


def test_file_values_and_overrides(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"group": "D4", "seed": 7, "tolerance": "1e-6"}))
    config = load_run_config({"seed": 3}, str(path))
    assert config["group"] == "D4"
    assert config["seed"] == 3
    assert config["tolerance"] == pytest.approx(1e-6)


@pytest.mark.parametrize(
    "overrides",
    [{"tolerance": 1}, {"tolerance": 0}, {"format": "yaml"}, {"order_cap": 0}],
    ids=["tolerance-too-large", "tolerance-zero", "format", "order-cap"],
)
def test_invalid_values(overrides):
    with pytest.raises(SchemaException):
        load_run_config(overrides)


def test_unreadable_file(tmp_path):
    with pytest.raises(SchemaException):
        load_run_config(path=str(tmp_path / "missing.json"))
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    with pytest.raises(SchemaException):
        load_run_config(path=str(broken))
