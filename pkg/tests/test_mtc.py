import json

import numpy as np
import pytest

from qdwalls.exceptions import (
    InvalidFusionChannelException,
    MTCConsistencyException,
    NonAbelianGroupException,
    OrderCapExceededException,
    SchemaException,
    ShapeMismatchException,
)
from qdwalls.group import preset_group
from qdwalls.mtc import (
    braid_sigma_squared,
    builtin_abelian_double,
    check_hexagon,
    check_pentagon,
    compatibility_check,
    dump_mtc,
    dump_wall,
    em_duality_wall,
    gauge_transform_wall,
    identity_wall,
    is_logical_preserving,
    load_mtc,
    load_wall,
    mutual_braiding,
    ribbon_path_coefficients,
    u_matrix,
    wrapping_eigenvalue,
)

Z2 = preset_group("Z2")


@pytest.fixture(scope="module")
def toric():
    return builtin_abelian_double(Z2)


def test_builtin_toric_code(toric):
    assert toric.labels == ["1", "e", "m", "f"]
    assert toric.total_dimension == pytest.approx(2.0)
    assert toric.channels("e", "m") == [3]
    assert toric.R("e", "m", "f") * toric.R("m", "e", "f") == pytest.approx(-1)


def test_builtin_limits():
    with pytest.raises(NonAbelianGroupException):
        builtin_abelian_double(preset_group("S3"))
    with pytest.raises(OrderCapExceededException):
        builtin_abelian_double(preset_group("Z3xZ3"))


@pytest.mark.parametrize("name", ["Z2", "Z3", "Z2xZ2"])
def test_pentagon_and_hexagon(name):
    data = builtin_abelian_double(preset_group(name))
    assert check_pentagon(data, samples=10, seed=1) < 1e-12
    assert check_hexagon(data, samples=10, seed=1) < 1e-12


@pytest.mark.parametrize("name", ["Z2", "Z3"])
def test_braiding_scalars(name):
    group = preset_group(name)
    data = builtin_abelian_double(group)
    for a in range(len(data)):
        assert wrapping_eigenvalue(data, 0, a) == pytest.approx(1 / group.order)
        for b in range(len(data)):
            assert mutual_braiding(data, a, b) == pytest.approx(
                np.conj(data.s[a, b]) * group.order
            )


def test_braid_sigma_squared(toric):
    trivial = braid_sigma_squared(toric, "1", "e", "1", "e", "e")
    assert np.allclose(trivial, [0, 1, 0, 0])
    charged = braid_sigma_squared(toric, "e", "m", "m", "e", "f")
    assert np.allclose(np.abs(charged), [0, 0, 0, 1])
    assert charged[3] == pytest.approx(-1)
    with pytest.raises(InvalidFusionChannelException):
        braid_sigma_squared(toric, "1", "e", "1", "e", "m")


def test_unknown_label(toric):
    with pytest.raises(SchemaException):
        toric.index("x")


def test_load_dumped_data(tmp_path, toric):
    path = tmp_path / "toric.json"
    path.write_text(json.dumps(dump_mtc(toric)))
    loaded = load_mtc(str(path))
    assert loaded.labels == toric.labels
    assert np.allclose(loaded.s, toric.s)
    assert np.allclose(loaded.t, toric.t)
    assert loaded.R("e", "m", "f") == pytest.approx(toric.R("e", "m", "f"))


def test_unnormalized_s(toric):
    raw = dump_mtc(toric)
    raw["s_normalization"] = "unnormalized"
    raw["S"] = (np.real(toric.s) * 2).tolist()
    assert np.allclose(load_mtc(raw).s, toric.s)


def test_invalid_mtc_files(tmp_path, toric):
    raw = dump_mtc(toric)
    with pytest.raises(SchemaException):
        load_mtc({**raw, "schema_version": "0.9"})
    with pytest.raises(SchemaException):
        load_mtc({**raw, "labels": ["1", "e", "e", "f"]})
    with pytest.raises(SchemaException):
        load_mtc({**raw, "duals": ["1", "e", "m", "x"]})
    with pytest.raises(SchemaException):
        load_mtc({key: value for key, value in raw.items() if key != "T"})
    with pytest.raises(SchemaException):
        load_mtc(tmp_path / "missing.json")
    with pytest.raises(MTCConsistencyException) as info:
        load_mtc({**raw, "S": np.eye(4).tolist()})
    assert info.value.identity == "S-vacuum-row"


def test_identity_wall_u_matrix(toric):
    u = u_matrix(identity_wall(toric), ["e", "m", "e", "m", "e", "m", "e", "m"])
    assert u.rows == ["f"]
    assert u.cols == ["f"]
    assert np.allclose(u.matrix, [[1]])
    assert is_logical_preserving(u)
    with pytest.raises(ShapeMismatchException):
        u_matrix(identity_wall(toric), ["e", "m"])


def test_em_wall_u_matrix():
    wall = em_duality_wall(Z2)
    u = u_matrix(wall, ["e", "m", "e", "m", "m", "e", "m", "e"])
    assert np.allclose(u.matrix, [[1]])
    assert is_logical_preserving(u)
    blocked = u_matrix(wall, ["e", "m", "e", "m", "e", "m", "e", "m"])
    assert not is_logical_preserving(blocked)


def test_gauge_invariance():
    wall = em_duality_wall(Z2)
    labels = ["e", "m", "e", "m", "m", "e", "m", "e"]
    phase = np.array([[np.exp(0.7j)]])
    moved = gauge_transform_wall(wall, phase)
    assert np.allclose(u_matrix(moved, labels).matrix, u_matrix(wall, labels).matrix)


def test_wall_files(tmp_path):
    wall = em_duality_wall(Z2)
    path = tmp_path / "wall.json"
    path.write_text(json.dumps(dump_wall(wall)))
    loaded = load_wall(wall.source, wall.target, str(path))
    assert loaded.leaf_symbols.keys() == wall.leaf_symbols.keys()
    with pytest.raises(SchemaException):
        load_wall(wall.source, wall.target, {"schema_version": "1.0"})


def test_logical_preserving_matrices():
    assert is_logical_preserving(np.array([[0, 2], [2, 0]]))
    assert not is_logical_preserving(np.array([[1, 1], [1, 1]]))
    assert not is_logical_preserving(np.zeros((2, 3)))
    assert not is_logical_preserving(np.zeros((0, 0)))


def test_ribbon_path_vacuum(toric):
    tensor = ribbon_path_coefficients(toric, identity_wall(toric), ["1"] * 6)
    assert tensor.shape == (4,) * 5
    assert tensor[0, 0, 0, 0, 0] == pytest.approx(1)
    assert np.count_nonzero(tensor) == 1


def test_compatibility_check():
    identity = np.eye(4, dtype=int)
    assert compatibility_check(identity, identity, identity, identity, 2) == (
        True,
        [2],
    )
    swap = identity[[0, 2, 1, 3]]
    ok, shared = compatibility_check(identity, swap, identity, identity, 1)
    assert not ok
    assert shared == []
