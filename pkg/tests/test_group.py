import json

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from qdwalls.exceptions import (
    InvalidGroupException,
    NotNormalSubgroupException,
    OrderCapExceededException,
    SchemaException,
)
from qdwalls.group import (
    FiniteGroup,
    QuotientGroup,
    build_group,
    cosets,
    cyclic_group,
    dihedral_group,
    double_cosets,
    from_permutations,
    is_isomorphic,
    load_group_spec,
    normal_subgroups_in,
    parse_subgroup,
    preset_group,
    quotient_group,
)

PRESETS = ["Z1", "Z2", "Z3", "Z4", "Z2xZ2", "S3", "D4", "Z6", "D5"]


def test_s3_labels_and_classes():
    group = preset_group("S3")
    assert group.order == 6
    assert group.labels == ["e", "τ", "τ²", "σ", "στ", "στ²"]
    assert not group.is_abelian
    assert [c.size for c in group.conjugacy_classes] == [1, 3, 2]
    assert [group.label(c.representative) for c in group.conjugacy_classes] == [
        "e",
        "σ",
        "τ",
    ]


def test_d4_class_order():
    group = preset_group("D4")
    reps = [group.label(c.representative) for c in group.conjugacy_classes]
    assert reps == ["e", "r²", "s", "sr", "r"]


def test_subgroup_counts():
    assert len(preset_group("S3").subgroups) == 6
    assert len(preset_group("D4").subgroups) == 10
    assert len(preset_group("Z2xZ2").subgroups) == 5
    assert len(preset_group("Z6").subgroups) == 4


def test_normal_subgroups_of_s3():
    group = preset_group("S3")
    orders = [s.order for s in normal_subgroups_in(group.whole)]
    assert orders == [1, 3, 6]


def test_character_table_dims():
    assert preset_group("S3").character_table.dims.tolist() == [1, 1, 2]
    assert preset_group("D4").character_table.dims.tolist() == [1, 1, 1, 1, 2]
    assert preset_group("Z1").character_table.dims.tolist() == [1]


@settings(max_examples=10, deadline=None)
@given(st.sampled_from(PRESETS))
def test_character_table_identities(name):
    group = preset_group(name)
    table = group.character_table
    assert table.orthogonality_residual() < 1e-8
    assert int(np.sum(table.dims**2)) == group.order
    assert np.allclose(table.chi[0], 1.0)


@settings(max_examples=10, deadline=None)
@given(st.sampled_from(PRESETS), st.data())
def test_cosets_partition(name, data):
    group = preset_group(name)
    subgroup = data.draw(st.sampled_from(group.subgroups))
    for side in ("left", "right"):
        decomposition = cosets(subgroup, side)
        assert len(decomposition) * subgroup.order == group.order
        assert decomposition.representatives[0] == 0
        assert decomposition.masks.sum(axis=0).tolist() == [1] * group.order
    double = double_cosets(subgroup, subgroup)
    assert double.masks.sum(axis=0).tolist() == [1] * group.order


def test_identity_is_relabelled_to_zero():
    group = FiniteGroup([[1, 0], [0, 1]], labels=["a", "e"])
    assert group.labels == ["e", "a"]
    assert group.mul.tolist() == [[0, 1], [1, 0]]


def test_invalid_tables():
    with pytest.raises(InvalidGroupException):
        FiniteGroup([[0, 1], [1, 1]])
    with pytest.raises(InvalidGroupException):
        FiniteGroup([[1, 1], [1, 1]])
    with pytest.raises(InvalidGroupException):
        FiniteGroup([[0, 1], [1, 0]], labels=["e", "e"])
    with pytest.raises(InvalidGroupException):
        preset_group("Q8")


def test_order_cap():
    with pytest.raises(OrderCapExceededException):
        cyclic_group(200)
    with pytest.raises(OrderCapExceededException):
        preset_group("Z9", order_cap=8)
    with pytest.raises(OrderCapExceededException):
        preset_group("D4xD4", order_cap=32)


def test_build_group_sources(tmp_path):
    table = cyclic_group(3).mul.tolist()
    assert build_group({"table": table, "name": "C3"}).name == "C3"
    assert build_group({"permutations": [[1, 0, 2], [1, 2, 0]]}).order == 6
    assert build_group({"preset": "S3"}).name == "S3"
    assert build_group("D4").order == 8
    path = tmp_path / "group.json"
    path.write_text(json.dumps({"table": table, "labels": ["e", "a", "b"]}))
    group = load_group_spec(str(path))
    assert group.labels == ["e", "a", "b"]
    with pytest.raises(SchemaException):
        build_group({"table": table, "preset": "Z3"})
    with pytest.raises(SchemaException):
        load_group_spec(tmp_path / "missing.json")


def test_isomorphism():
    s3 = preset_group("S3")
    assert is_isomorphic(s3, dihedral_group(3))
    assert is_isomorphic(s3, from_permutations([[1, 0, 2], [1, 2, 0]]))
    assert not is_isomorphic(preset_group("Z4"), preset_group("Z2xZ2"))
    assert not is_isomorphic(s3, preset_group("Z6"))


def test_parse_subgroup_aliases():
    s3 = preset_group("S3")
    assert parse_subgroup(s3, "σ").label == "{e,σ}"
    assert parse_subgroup(s3, "s") == parse_subgroup(s3, "σ")
    assert parse_subgroup(s3, "t").order == 3
    assert parse_subgroup(s3, "t2") == parse_subgroup(s3, "τ")
    assert parse_subgroup(s3, "G") == s3.whole
    assert parse_subgroup(s3, "e").is_trivial
    assert parse_subgroup(s3, []).is_trivial
    d4 = preset_group("D4")
    assert d4.element_index("sr3") == 7
    assert parse_subgroup(d4, "r2,s").label == "{e,r²,s,sr²}"
    klein = preset_group("Z2xZ2")
    assert parse_subgroup(klein, "(0,1)").label == "{(0,0),(0,1)}"
    with pytest.raises(InvalidGroupException):
        parse_subgroup(s3, "x")


def test_quotient_group():
    d4 = preset_group("D4")
    center = parse_subgroup(d4, "r2")
    quotient = quotient_group(d4.whole, center)
    assert isinstance(quotient, QuotientGroup)
    assert quotient.order == 4
    assert is_isomorphic(quotient, preset_group("Z2xZ2"))
    assert quotient.project(d4.element_index("r")) == quotient.project(
        d4.element_index("r3")
    )
    assert quotient.lift(0) == 0
    with pytest.raises(NotNormalSubgroupException):
        s3 = preset_group("S3")
        QuotientGroup(s3.whole, parse_subgroup(s3, "σ"))
