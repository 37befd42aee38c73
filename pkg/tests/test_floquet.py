from unittest.mock import patch

import numpy as np
import pytest

from qdwalls.condensation import PhaseSpec, parent_phase
from qdwalls.exceptions import (
    IllegalTransitionException,
    InvalidScheduleException,
    OrderCapExceededException,
    SchemaException,
    ShapeMismatchException,
)
from qdwalls.floquet import (
    brute_force_conditional_unitary,
    check_schedule,
    enumerate_phase_specs,
    enumerate_schedules,
    frame_matching_unitary,
    is_legal_transition,
    overlap_matrix,
    qubit_condition,
    to_dot,
    transition_graph,
    tree_paths,
)
from qdwalls.group import preset_group
from qdwalls.tunneling import is_valid_anyon_map

Z2 = preset_group("Z2")
D4 = preset_group("D4")
KLEIN = preset_group("Z2xZ2")

D4_EDGES = [
    (1, 5),
    (1, 6),
    (1, 8),
    (1, 9),
    (1, 10),
    (1, 11),
    (2, 4),
    (2, 6),
    (2, 9),
    (2, 11),
    (3, 4),
    (3, 5),
    (3, 8),
    (3, 10),
    (5, 8),
    (5, 10),
    (6, 9),
    (6, 11),
]

D4_LISTED = [
    ("G", "r"),
    ("G", "r2,s"),
    ("G", "r2,sr"),
    ("r", "r2"),
    ("r2,s", "r2"),
    ("r2,sr", "r2"),
    ("r2", "e"),
    ("s", "e"),
    ("sr", "e"),
    ("sr2", "e"),
]
D4_LISTED_EDGES = [edge for edge in D4_EDGES if 11 not in edge]


@pytest.fixture(scope="module")
def d4_graph():
    return transition_graph(enumerate_phase_specs(D4, Z2))


@pytest.fixture(scope="module")
def klein_graph():
    return transition_graph(enumerate_phase_specs(KLEIN, Z2))


def test_d4_phases(d4_graph):
    assert len(d4_graph) == 11
    assert d4_graph.phase(1).key == "{e,r,r²,r³,s,sr,sr²,sr³}/{e,r,r²,r³}"
    assert d4_graph.phase(5).key == "{e,r²,s,sr²}/{e,r²}"
    assert d4_graph.phase(11).key == "{e,sr³}/{e}"
    assert [d4_graph.phase(n).label for n in (1, 11)] == ["1", "11"]


def test_d4_edges(d4_graph):
    assert d4_graph.edges == D4_EDGES
    assert d4_graph.as_dict()["adjacency"]["7"] == []


def test_d4_listed_phases(d4_graph):
    phases = enumerate_phase_specs(D4, Z2, only=D4_LISTED)
    assert len(phases) == 10
    assert [spec.label for spec in phases] == [str(n) for n in range(1, 11)]
    assert phases == [d4_graph.phase(n) for n in range(1, 11)]
    assert transition_graph(phases).edges == D4_LISTED_EDGES


def test_listed_phases_keep_the_given_order():
    phases = enumerate_phase_specs(D4, Z2, only=[("s", "e"), ("G", "r")])
    assert [spec.key for spec in phases] == [
        "{e,s}/{e}",
        "{e,r,r²,r³,s,sr,sr²,sr³}/{e,r,r²,r³}",
    ]
    assert [spec.label for spec in phases] == ["1", "2"]
    assert transition_graph(phases).edges == [(1, 2)]


@pytest.mark.parametrize(
    "only",
    [[("r", "e")], [("s", "e"), ("s", "e")]],
    ids=["wrong-quotient", "duplicate"],
)
def test_listed_phases_errors(only):
    with pytest.raises(SchemaException):
        enumerate_phase_specs(D4, Z2, only=only)


def test_listed_non_normal_phase_needs_the_flag():
    with pytest.raises(SchemaException):
        enumerate_phase_specs(D4, Z2, only=[("s,r2", "s")])
    phases = enumerate_phase_specs(D4, Z2, False, only=[("s,r2", "s")])
    assert phases[0].key == "{e,r²,s,sr²}/{e,s}"


def test_klein_hexagon(klein_graph):
    assert klein_graph.edges == [(1, 5), (1, 6), (2, 4), (2, 6), (3, 4), (3, 5)]
    schedules = enumerate_schedules(klein_graph, max_len=6)
    assert [s.period for s in schedules] == [2] * 6 + [6]
    hexagon = schedules[-1]
    assert hexagon.nodes == (1, 5, 3, 4, 2, 6, 1)
    assert is_valid_anyon_map(hexagon.phi_total)
    assert hexagon.automorphism


def test_klein_overlap():
    phases = enumerate_phase_specs(KLEIN, Z2)
    assert overlap_matrix(phases[0], phases[4]).entries.tolist() == [[1, 0], [0, 1]]
    assert overlap_matrix(phases[3], phases[5]).entries.tolist() == [[1, 0], [0, 0]]
    assert not is_legal_transition(phases[3], phases[5])
    assert qubit_condition(phases[3], phases[2])


def test_d4_schedules(d4_graph):
    assert str(check_schedule(d4_graph, [1, 8, 1])) == "1→8→1"
    walk = check_schedule(d4_graph, [1, 8, 5, 10, 3, 8, 1])
    assert walk.period == 6
    schedules = [s.nodes for s in enumerate_schedules(d4_graph, max_len=4)]
    assert (1, 8, 3, 10, 1) in schedules
    assert (1, 8, 1) in schedules
    assert all(nodes[0] == min(nodes) for nodes in schedules)
    assert len(schedules) == len(set(schedules))


def test_schedule_errors(d4_graph):
    with pytest.raises(InvalidScheduleException):
        check_schedule(d4_graph, [1, 8])
    with pytest.raises(InvalidScheduleException):
        check_schedule(d4_graph, [1, 12, 1])
    with pytest.raises(InvalidScheduleException):
        check_schedule(d4_graph, ["1", "x", "1"])
    with pytest.raises(IllegalTransitionException):
        check_schedule(d4_graph, [1, 2, 1])
    with pytest.raises(IllegalTransitionException):
        d4_graph.edge_map(7, 8)
    with pytest.raises(InvalidScheduleException):
        enumerate_schedules(d4_graph, max_len=1)


def test_self_loops(klein_graph):
    plain = enumerate_schedules(klein_graph, max_len=3)
    looped = enumerate_schedules(klein_graph, max_len=3, include_self_loops=True)
    assert len(looped) == len(plain) + len(klein_graph)
    assert looped[0].nodes == (1, 1)
    assert looped[0].automorphism


def test_tree_paths(d4_graph):
    paths = tree_paths(d4_graph, max_len=2)
    assert (1, 8) in paths
    assert (8, 3, 10) in paths
    assert (3, 8, 1) not in paths
    for path in paths:
        assert len(path) <= 3
        assert path[0] < path[-1]
        assert all(tuple(sorted(step)) in D4_EDGES for step in zip(path, path[1:]))


def test_to_dot(klein_graph):
    text = to_dot(klein_graph)
    assert text.startswith("graph transitions {")
    assert "  1 -- 5;" in text
    assert "  4 -- 6;" not in text
    assert text.endswith("}")


@pytest.mark.parametrize("group", [D4, KLEIN], ids=["D4", "Z2xZ2"])
def test_oracle_agrees_with_overlap_test(group):
    phases = enumerate_phase_specs(group, Z2)
    for source in phases:
        for target in phases:
            assert brute_force_conditional_unitary(
                source, target
            ) == is_legal_transition(source, target), (source.key, target.key)


@pytest.mark.parametrize("group", [D4, KLEIN], ids=["D4", "Z2xZ2"])
def test_legality_is_symmetric(group):
    phases = enumerate_phase_specs(group, Z2)
    for source in phases:
        for target in phases:
            assert is_legal_transition(source, target) == is_legal_transition(
                target, source
            ), (source.key, target.key)


def test_oracle_applies_the_correction():
    phases = enumerate_phase_specs(KLEIN, Z2)
    source, target = phases[3], phases[2]
    assert brute_force_conditional_unitary(source, target)
    with patch(
        "qdwalls.floquet.frame_matching_unitary", return_value=np.eye(KLEIN.order)
    ) as matching:
        assert not brute_force_conditional_unitary(source, target)
    matching.assert_called_once()


def test_oracle_order_cap():
    group = preset_group("S3xZ3")
    with pytest.raises(OrderCapExceededException):
        brute_force_conditional_unitary(parent_phase(group), parent_phase(group))


def test_different_quotients_are_rejected():
    s3 = preset_group("S3")
    with pytest.raises(ShapeMismatchException):
        is_legal_transition(parent_phase(s3), PhaseSpec(s3, "σ", "e"))


def test_frame_matching_unitary():
    rng = np.random.default_rng(7)
    base, _ = np.linalg.qr(rng.normal(size=(6, 2)) + 1j * rng.normal(size=(6, 2)))
    target, _ = np.linalg.qr(rng.normal(size=(6, 2)))
    unitary = frame_matching_unitary(base, target)
    assert np.allclose(unitary @ base, target)
    assert np.allclose(unitary.conj().T @ unitary, np.eye(6))
    with pytest.raises(ShapeMismatchException):
        frame_matching_unitary(base, target[:, :1])
