import json
from unittest.mock import MagicMock, patch

import numpy as np
import pytest

from qdwalls.const import ENV_CACHE_DIR, EXIT_DIAGNOSTIC
from qdwalls.exceptions import (
    NegativeMultiplicityException,
    NonIntegerMultiplicityException,
    NotNormalSubgroupException,
    NumericalFailureException,
)
from qdwalls.helpers import (
    cache_dir,
    cache_key,
    catch_domain_errors,
    complex_to_json,
    diagnostic,
    load_cached_array,
    retry_seeded,
    round_to_int,
    store_cached_array,
)


def test_retry_seeded_moves_to_next_seed():
    inner = MagicMock(side_effect=[NumericalFailureException("a"), "ok"])

    @retry_seeded(limit=3)
    def solve(seed):
        return inner(seed=seed)

    assert solve(seed=5) == "ok"
    assert [call.kwargs["seed"] for call in inner.call_args_list] == [5, 6]


def test_retry_seeded_gives_up():
    inner = MagicMock(side_effect=NumericalFailureException("never"))

    @retry_seeded(limit=2)
    def solve(seed):
        return inner(seed=seed)

    with pytest.raises(NumericalFailureException) as info:
        solve()
    assert "0..1" in str(info.value)
    assert inner.call_count == 2


def test_retry_seeded_without_catching():
    inner = MagicMock(side_effect=NumericalFailureException("once"))

    @retry_seeded(limit=4, catch_exceptions=False)
    def solve(seed):
        return inner(seed=seed)

    with pytest.raises(NumericalFailureException):
        solve()
    assert inner.call_count == 1


def test_round_to_int():
    assert round_to_int([1.0000001, 2 + 1e-9j, 0.0]).tolist() == [1, 2, 0]
    with pytest.raises(NonIntegerMultiplicityException) as info:
        round_to_int([1.0, 0.5], labels=["A", "B"])
    assert info.value.label == "B"
    with pytest.raises(NegativeMultiplicityException):
        round_to_int([-1.0])
    assert round_to_int([-1.0], allow_negative=True).tolist() == [-1]


def test_cache_disabled_without_env(monkeypatch):
    monkeypatch.delenv(ENV_CACHE_DIR, raising=False)
    assert cache_dir() is None
    store_cached_array("key", np.zeros(2))
    assert load_cached_array("key") is None


def test_cache_round_trip(monkeypatch, tmp_path):
    monkeypatch.setenv(ENV_CACHE_DIR, str(tmp_path / "cache"))
    key = cache_key("tensor", np.arange(3), (1, 2))
    assert key == cache_key("tensor", np.arange(3), (1, 2))
    assert key != cache_key("tensor", np.arange(4), (1, 2))
    assert load_cached_array(key) is None
    store_cached_array(key, np.eye(2))
    assert np.array_equal(load_cached_array(key), np.eye(2))
    (tmp_path / "cache" / f"{key}.npy").write_bytes(b"garbage")
    assert load_cached_array(key) is None


def test_complex_to_json():
    assert complex_to_json(1 - 2j) == [1.0, -2.0]
    assert complex_to_json(3) == [3.0, 0.0]


def test_diagnostic():
    report = diagnostic(NotNormalSubgroupException("{e,σ}", "G"))
    assert report["error"] == "NotNormalSubgroupException"
    assert report["details"] == {"subgroup": "{e,σ}", "ambient": "G"}


def test_catch_domain_errors(capsys):
    @catch_domain_errors
    def command():
        raise NotNormalSubgroupException("{e,σ}", "G")

    with patch("qdwalls.helpers._LOGGER") as logger:
        assert command() == EXIT_DIAGNOSTIC
        logger.error.assert_called_once()
    printed = json.loads(capsys.readouterr().out)
    assert printed["error"] == "NotNormalSubgroupException"


def test_catch_domain_errors_passes_other_errors():
    @catch_domain_errors
    def command():
        raise ValueError("bug")

    with pytest.raises(ValueError):
        command()
