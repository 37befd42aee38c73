from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from qdwalls.condensation import (
    PhaseSpec,
    chi_condensable,
    condensable_algebra,
    condensable_character,
    derived_dimension_check,
    enumerate_phases,
    format_algebra,
    is_lagrangian,
    parent_phase,
)
from qdwalls.exceptions import NotNormalSubgroupException
from qdwalls.group import preset_group

S3 = preset_group("S3")
D4 = preset_group("D4")
KLEIN = preset_group("Z2xZ2")


def test_s3_algebras():
    assert str(condensable_algebra(PhaseSpec(S3, "σ", "e"))) == "A+C"
    assert str(condensable_algebra(PhaseSpec(S3, "G", "τ"))) == "A+F"
    assert str(condensable_algebra(PhaseSpec(S3, "G", "G"))) == "A+D+F"
    assert str(condensable_algebra(parent_phase(S3))) == "A"
    assert is_lagrangian(condensable_algebra(PhaseSpec(S3, "e", "e")))
    assert not is_lagrangian(condensable_algebra(PhaseSpec(S3, "σ", "e")))


@pytest.mark.parametrize(
    "numerator, denominator, expected",
    [
        ("(0,1)", "e", "1+e"),
        ("G", "(1,1)", "1+mm~"),
        ("(1,0)", "e", "1+e~"),
        ("G", "(0,1)", "1+m~"),
        ("(1,1)", "e", "1+ee~"),
        ("G", "(1,0)", "1+m"),
    ],
)
def test_klein_algebras(numerator, denominator, expected):
    algebra = condensable_algebra(PhaseSpec(KLEIN, numerator, denominator))
    assert format_algebra(algebra) == expected
    assert algebra.dim == 2
    assert not is_lagrangian(algebra)


def test_enumerate_phases():
    phases = enumerate_phases(S3)
    assert len(phases) == 12
    assert phases[0].key == "{e,τ,τ²,σ,στ,στ²}/{e,τ,τ²,σ,στ,στ²}"
    assert phases[-1].key == "{e}/{e}"
    assert len(enumerate_phases(KLEIN)) == 12


def test_not_normal_denominator():
    with pytest.raises(NotNormalSubgroupException):
        PhaseSpec(S3, "G", "σ")
    with pytest.raises(NotNormalSubgroupException):
        PhaseSpec(S3, "σ", "τ")


def test_denominator_not_normal_in_parent():
    spec = PhaseSpec(S3, "σ", "σ")
    assert not spec.n_normal_in_group
    algebra = condensable_algebra(spec)
    assert str(algebra) == "A+C+D"
    assert algebra.as_dict()["lagrangian"]


def test_abelian_shortcut_matches_general_sum():
    spec = PhaseSpec(KLEIN, "G", "(0,1)")
    values = condensable_character(spec).values
    for h in range(KLEIN.order):
        for g in range(KLEIN.order):
            assert abs(values[h, g] - chi_condensable(spec, h, g)) < 1e-12


@settings(max_examples=15, deadline=None)
@given(st.sampled_from([S3, D4, KLEIN]), st.data())
def test_dimension_formula(group, data):
    phase = data.draw(st.sampled_from(enumerate_phases(group)))
    algebra = condensable_algebra(phase)
    assert algebra.ok
    assert np.all(algebra.multiplicities >= 0)
    assert algebra.multiplicities[0] == 1
    if phase.n_normal_in_group:
        assert derived_dimension_check(algebra)
        assert is_lagrangian(algebra) == (phase.quotient_order == 1)
