from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from qdwalls.exceptions import InvalidClassFunctionException
from qdwalls.group import preset_group
from qdwalls.qdouble import (
    DoubleClassFunction,
    KMap,
    QuantumDouble,
    chi_anyon,
    decompose,
    dual,
    format_combination,
    fusion_rules,
    quantum_double,
)

PRESETS = ["Z1", "Z2", "Z3", "Z2xZ2", "S3", "D4", "Z4"]


def test_s3_anyon_table():
    double = quantum_double(preset_group("S3"))
    assert double.names == ["A", "B", "C", "D", "E", "F", "H", "G"]
    assert double.quantum_dims.tolist() == [1, 1, 2, 3, 3, 2, 2, 2]
    assert [a.centralizer.order for a in double] == [6, 6, 6, 2, 2, 3, 3, 3]


def test_d4_has_22_anyons():
    double = quantum_double(preset_group("D4"))
    assert len(double) == 22
    assert double.names[:5] == ["A0", "A2", "A3", "A1", "A4"]
    assert sorted(double.names[10:14]) == ["D00", "D01", "D10", "D11"]


def test_toric_code_names_and_twists():
    double = quantum_double(preset_group("Z2"))
    assert double.names == ["1", "e", "m", "f"]
    assert np.allclose(double.modular_data.t, [1, 1, 1, -1])
    assert double.fusion[1, 2, 3] == 1
    assert double.duals.tolist() == [0, 1, 2, 3]


def test_z3_duals():
    double = quantum_double(preset_group("Z3"))
    e = double.anyon_by_name("e")
    assert dual(e).name == "e~"
    assert dual(double.anyon_by_name("m")).name == "m~"
    with pytest.raises(KeyError):
        double.anyon_by_name("nope")


@settings(max_examples=7, deadline=None)
@given(st.sampled_from(PRESETS))
def test_modular_identities(name):
    group = preset_group(name)
    double = quantum_double(group)
    assert int(np.sum(double.quantum_dims**2)) == group.order**2
    assert np.allclose(double.norms, group.order)
    s = double.modular_data.s
    assert np.allclose(s @ s.conj().T, np.eye(len(double)), atol=1e-8)
    assert np.allclose(s, s.T, atol=1e-8)
    assert np.allclose(s[0], double.quantum_dims / group.order)
    assert np.abs(double.total_dimension - group.order) < 1e-9
    assert len(set(double.names)) == len(double)


@settings(max_examples=7, deadline=None)
@given(st.sampled_from(PRESETS), st.integers(min_value=1, max_value=1000))
def test_characters_do_not_depend_on_representatives(name, seed):
    group = preset_group(name)
    kmap = KMap(group, seed)
    assert kmap.is_consistent()
    reference = QuantumDouble(group)
    moved = QuantumDouble(group, kmap_seed=seed)
    assert np.abs(reference.characters - moved.characters).max() < 1e-10


def test_decompose_combination():
    double = quantum_double(preset_group("S3"))
    coefficients = [1, 0, 2, 0, 1, 0, 0, 3]
    assert double.decompose(double.combination(coefficients)).tolist() == coefficients
    assert decompose(double.character(3)).tolist() == [0, 0, 0, 1, 0, 0, 0, 0]


def test_decompose_rejects_non_class_function():
    group = preset_group("S3")
    values = np.zeros((group.order, group.order))
    values[0, group.element_index("σ")] = 1.0
    with pytest.raises(InvalidClassFunctionException):
        quantum_double(group).decompose(DoubleClassFunction(group, values))


def test_format_combination():
    assert format_combination([1, 0, 2], ["1", "e", "m"]) == "1+2m"
    assert format_combination([0, 0], ["1", "e"]) == "0"


def test_toric_code_characters():
    double = quantum_double(preset_group("Z2"))
    charge = double.anyon_by_name("e")
    flux = double.anyon_by_name("m")
    assert chi_anyon(charge, 1, 0) == pytest.approx(-1)
    assert chi_anyon(charge, 0, 1) == 0
    assert chi_anyon(flux, 1, 1) == pytest.approx(1)
    assert chi_anyon(flux, 0, 0) == 0


def test_fusion_rules_are_symmetric():
    double = quantum_double(preset_group("S3"))
    fusion = fusion_rules(double.anyons)
    assert np.array_equal(fusion, fusion.transpose(1, 0, 2))
    assert np.array_equal(fusion[0], np.eye(len(double), dtype=fusion.dtype))
    dims = double.quantum_dims
    assert np.allclose(np.einsum("abc,c->ab", fusion, dims), np.outer(dims, dims))
