"""
Measurement-induced transitions between derived phases.

SPDX-License-Identifier: Apache-2.0

A transition from D(M/N) to D(M'/N') by measuring T^{M'} and L^{N'} on every
edge preserves the encoded logical state iff the coset overlap matrix
M_ji = |g'_jN' ∩ g_iN| satisfies MᵀM = c·id. Legal transitions among phases
with a common quotient form an undirected graph whose closed walks are Floquet
schedules.
"""

from dataclasses import dataclass, field
import logging
from typing import Any, Iterable, Optional, Sequence

import networkx as nx
import numpy as np
from scipy.linalg import null_space

from .condensation import PhaseSpec
from .const import (
    DEFAULT_MAX_SCHEDULE_LEN,
    DEFAULT_OPERATOR_TOLERANCE,
    DEFAULT_ORACLE_CAP,
)
from .exceptions import (
    IllegalTransitionException,
    InvalidScheduleException,
    NumericalFailureException,
    OrderCapExceededException,
    SchemaException,
    ShapeMismatchException,
)
from .group import FiniteGroup, find_isomorphism, normal_subgroups_in
from .qdouble import quantum_double
from .tunneling import (
    TunnelingMap,
    TunnelingProblem,
    compose_maps,
    is_automorphism,
    tunneling_map,
)

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class OverlapMatrix:
    """Coset intersection counts M[j, i] = |g'_jN' ∩ g_iN|."""

    source: PhaseSpec
    target: PhaseSpec
    entries: np.ndarray = field(compare=False)

    @property
    def gram(self) -> np.ndarray:
        """Return MᵀM."""
        return self.entries.T @ self.entries


def overlap_matrix(source: PhaseSpec, target: PhaseSpec) -> OverlapMatrix:
    """Count coset intersections with canonical (smallest element) representatives."""
    if source.group is not target.group:
        raise ShapeMismatchException("Phases live in different groups")
    if source.quotient_order != target.quotient_order:
        raise ShapeMismatchException(
            f"Quotient orders differ: {source.key} has {source.quotient_order}, "
            f"{target.key} has {target.quotient_order}"
        )
    source_masks = source.quotient.decomposition.masks.astype(np.int64)
    target_masks = target.quotient.decomposition.masks.astype(np.int64)
    return OverlapMatrix(source, target, target_masks @ source_masks.T)


def _is_scaled_identity(gram: np.ndarray) -> bool:
    scale = gram[0, 0]
    identity = np.eye(len(gram), dtype=gram.dtype)
    return bool(scale >= 1 and np.array_equal(gram, scale * identity))


def qubit_condition(source: PhaseSpec, target: PhaseSpec) -> bool:
    """Sufficient condition for d = 2 on the nontrivial cosets σN and σ'N'.

    σ'N' ∩ N = N' ∩ σN = ∅ and |N' ∩ N| = |σ'N' ∩ σN| ≠ 0.
    """
    if source.quotient_order != 2 or target.quotient_order != 2:
        raise ShapeMismatchException("The qubit condition needs two cosets")
    cosets = source.quotient.decomposition.masks
    target_cosets = target.quotient.decomposition.masks
    n, sigma_n = cosets[0], cosets[1]
    n_prime, sigma_n_prime = target_cosets[0], target_cosets[1]
    same = int(np.sum(n & n_prime))
    swapped = int(np.sum(sigma_n & sigma_n_prime))
    return bool(
        not np.any(sigma_n_prime & n)
        and not np.any(n_prime & sigma_n)
        and same == swapped
        and same != 0
    )


def is_legal_transition(source: PhaseSpec, target: PhaseSpec) -> bool:
    """Return whether MᵀM = c·id for an integer c ≥ 1."""
    legal = _is_scaled_identity(overlap_matrix(source, target).gram)
    if source.quotient_order == 2 and legal != qubit_condition(source, target):
        raise NumericalFailureException(
            f"{source.key} -> {target.key}: qubit condition disagrees with the "
            "overlap test"
        )
    return legal


def enumerate_phase_specs(
    group: FiniteGroup,
    target: FiniteGroup,
    normal_in_group: bool = True,
    only: Optional[Sequence[Any]] = None,
) -> list[PhaseSpec]:
    """Return all (M, N ⊴ M) with M/N isomorphic to the target, numbered from 1.

    With ``normal_in_group`` N must also be normal in G. ``only`` keeps the
    listed phases (PhaseSpec or (M, N) pairs), numbered in the listed order.
    """
    specs = []
    for M in group.subgroups:
        if M.order % target.order:
            continue
        for N in normal_subgroups_in(M):
            if M.order != N.order * target.order:
                continue
            if normal_in_group and not N.is_normal:
                continue
            spec = PhaseSpec(group, M, N)
            if find_isomorphism(spec.quotient, target) is not None:
                specs.append(spec)
    specs.sort(key=lambda s: s.sort_key)
    if only is not None:
        specs = _select_phases(group, specs, only)
    return [spec.with_name(str(number)) for number, spec in enumerate(specs, 1)]


def _select_phases(
    group: FiniteGroup, specs: list[PhaseSpec], only: Sequence[Any]
) -> list[PhaseSpec]:
    selected = []
    for entry in only:
        spec = entry if isinstance(entry, PhaseSpec) else PhaseSpec(group, *entry)
        if spec not in specs:
            raise SchemaException(f"{spec.key} is not a phase with this quotient")
        if spec in selected:
            raise SchemaException(f"{spec.key} listed twice")
        selected.append(spec)
    _LOGGER.debug("Kept %s of %s phases", len(selected), len(specs))
    return selected


def _normalized_frame(frame: np.ndarray) -> Optional[np.ndarray]:
    """Scale a frame with Gram c·I (c > 0) to orthonormal; None when c = 0.

    Raises ValueError when the Gram matrix is not proportional to the identity.
    """
    gram = frame.conj().T @ frame
    scale = float(np.real(np.trace(gram))) / len(gram)
    if np.abs(gram - scale * np.eye(len(gram))).max() > DEFAULT_OPERATOR_TOLERANCE:
        raise ValueError("Gram matrix not proportional to the identity")
    if scale <= DEFAULT_OPERATOR_TOLERANCE:
        return None
    return frame / np.sqrt(scale)


def frame_matching_unitary(base: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Unitary U with U·base = target for orthonormal frames of equal size.

    Both frames are completed to orthonormal bases with scipy's null_space, so
    the result is deterministic.
    """
    if base.shape != target.shape:
        raise ShapeMismatchException(
            f"Frames of shapes {base.shape} and {target.shape}"
        )
    full_base = np.hstack([base, null_space(base.conj().T)])
    full_target = np.hstack([target, null_space(target.conj().T)])
    unitary = full_target @ full_base.conj().T
    if np.abs(unitary @ base - target).max() > 1e-8:
        raise NumericalFailureException("Frame matching failed")
    return unitary


def restrict_projector(spec: PhaseSpec) -> np.ndarray:
    return np.diag(spec.M.mask.astype(float))


def quotient_projector(spec: PhaseSpec) -> np.ndarray:
    """(1/|N|)·Σ_n R_n with R_n|g⟩ = |g·n⟩."""
    group = spec.group
    projector = np.zeros((group.order, group.order))
    everything = np.arange(group.order)
    for n in spec.N.elements:
        projector[group.mul[everything, n], everything] += 1.0
    return projector / spec.N.order


def coset_frame(spec: PhaseSpec) -> np.ndarray:
    """Columns |g_iN⟩ normalized, one per coset of N in M."""
    masks = spec.quotient.decomposition.masks.astype(float)
    return (masks / np.sqrt(spec.N.order)).T


def _is_isometry(frame: np.ndarray) -> bool:
    gram = frame.conj().T @ frame
    return bool(np.allclose(gram, np.eye(len(gram)), atol=DEFAULT_OPERATOR_TOLERANCE))


def branch_frames(frame: np.ndarray, projector: np.ndarray):
    """Frames after the preferred (1) and unwanted (0) outcome, orthonormalized."""
    identity = np.eye(len(projector))
    preferred = _normalized_frame(projector @ frame)
    unwanted = _normalized_frame((identity - projector) @ frame)
    return preferred, unwanted


def brute_force_conditional_unitary(source: PhaseSpec, target: PhaseSpec) -> bool:
    """Search for outcome-conditioned corrections on a single |G|-level qudit.

    Measures T^{M'} then L^{N'} on the logical frame |g_iN⟩. Each outcome
    branch must carry the frame to one with Gram c·I; unwanted branches are
    corrected onto the preferred branch by explicit frame matching, and the
    corrected frame must be orthonormal and inside the measured eigenspace.
    """
    group = source.group
    if group.order > DEFAULT_ORACLE_CAP:
        raise OrderCapExceededException(group.order, DEFAULT_ORACLE_CAP)
    frame = coset_frame(source)
    for projector in (restrict_projector(target), quotient_projector(target)):
        try:
            preferred, unwanted = branch_frames(frame, projector)
        except ValueError:
            return False
        if preferred is None:
            return False
        if unwanted is not None:
            corrected = frame_matching_unitary(unwanted, preferred) @ unwanted
            if not _is_isometry(corrected) or not np.allclose(
                projector @ corrected, corrected, atol=DEFAULT_OPERATOR_TOLERANCE
            ):
                return False
        frame = preferred
    return True


@dataclass
class Schedule:
    """Closed walk through the transition graph."""

    nodes: tuple[int, ...]
    phi_total: Optional[np.ndarray] = field(default=None, repr=False)
    automorphism: Optional[bool] = None

    @property
    def period(self) -> int:
        """Return the number of steps per period."""
        return len(self.nodes) - 1

    def __str__(self) -> str:
        return "→".join(str(node) for node in self.nodes)

    def as_dict(self) -> dict[str, Any]:
        """Return a JSON serializable view."""
        return {
            "nodes": list(self.nodes),
            "period": self.period,
            "phi_total": None if self.phi_total is None else self.phi_total.tolist(),
            "automorphism": self.automorphism,
        }


class TransitionGraph:
    """Undirected graph of legal transitions, nodes numbered from 1."""

    def __init__(self, specs: Sequence[PhaseSpec]) -> None:
        self.specs = {index: spec for index, spec in enumerate(specs, 1)}
        graph = nx.Graph()
        for index, spec in self.specs.items():
            graph.add_node(index, spec=spec, label=spec.label)
        nodes = list(self.specs)
        for position, u in enumerate(nodes):
            for v in nodes[position + 1 :]:
                if is_legal_transition(self.specs[u], self.specs[v]):
                    graph.add_edge(u, v, maps={})
        self.graph = graph
        _LOGGER.debug(
            "Transition graph with %s nodes and %s edges",
            graph.number_of_nodes(),
            graph.number_of_edges(),
        )

    def __len__(self) -> int:
        return len(self.specs)

    @property
    def edges(self) -> list[tuple[int, int]]:
        """Return the legal pairs sorted."""
        return sorted(tuple(sorted(edge)) for edge in self.graph.edges)

    def phase(self, node: int) -> PhaseSpec:
        """Return the phase of a node."""
        return self.specs[node]

    def edge_map(self, u: int, v: int) -> TunnelingMap:
        """Tunneling map for the step u → v, computed once per direction."""
        if u == v:
            double = quantum_double(self.specs[u].quotient)
            return TunnelingMap(np.eye(len(double), dtype=np.int64), double, double)
        if not self.graph.has_edge(u, v):
            raise IllegalTransitionException(u, v)
        maps = self.graph.edges[u, v]["maps"]
        if (u, v) not in maps:
            problem = TunnelingProblem(
                self.specs[u].group, self.specs[v], self.specs[u]
            )
            maps[(u, v)] = tunneling_map(problem)
        return maps[(u, v)]

    def composite(self, nodes: Sequence[int]) -> TunnelingMap:
        """Compose the step maps along a walk."""
        total = self.edge_map(nodes[0], nodes[0])
        for u, v in zip(nodes, nodes[1:]):
            total = compose_maps(self.edge_map(u, v), total)
        return total

    def as_dict(self) -> dict[str, Any]:
        """JSON adjacency: nodes with their subgroups and the legal pairs."""
        return {
            "nodes": [
                {"id": node, "M": spec.M.label, "N": spec.N.label}
                for node, spec in self.specs.items()
            ],
            "edges": [list(edge) for edge in self.edges],
            "adjacency": {
                str(node): sorted(self.graph.neighbors(node)) for node in self.specs
            },
        }


def transition_graph(specs: Sequence[PhaseSpec]) -> TransitionGraph:
    """Build the graph of legal transitions among the given phases."""
    return TransitionGraph(specs)


def _canonical_cycle(cycle: Sequence[int]) -> tuple[int, ...]:
    start = cycle.index(min(cycle))
    forward = tuple(cycle[start:]) + tuple(cycle[:start])
    backward = (forward[0],) + tuple(reversed(forward[1:]))
    return min(forward, backward)


def _finish(graph: TransitionGraph, nodes: Sequence[int]) -> Schedule:
    phi = graph.composite(nodes)
    modular = quantum_double(graph.phase(nodes[0]).quotient)
    verdict = is_automorphism(phi.matrix, modular.modular_data, modular.fusion)
    return Schedule(tuple(nodes), phi.matrix, verdict)


def enumerate_schedules(
    graph: TransitionGraph,
    max_len: int = DEFAULT_MAX_SCHEDULE_LEN,
    include_self_loops: bool = False,
) -> list[Schedule]:
    """All simple cycles up to max_len, plus back-and-forth 2-cycles.

    Cycles equal up to rotation or reflection are reported once, starting from
    their smallest node.
    """
    if max_len < 2:
        raise InvalidScheduleException(f"max_len must be at least 2, got {max_len}")
    cycles = {_canonical_cycle(list(edge)) for edge in graph.graph.edges}
    for cycle in nx.simple_cycles(graph.graph, length_bound=max_len):
        if len(cycle) >= 3:
            cycles.add(_canonical_cycle(cycle))
    if include_self_loops:
        cycles.update((node,) for node in graph.specs)
    schedules = [
        _finish(graph, cycle + (cycle[0],))
        for cycle in sorted(cycles, key=lambda c: (len(c), c))
    ]
    _LOGGER.debug("Found %s schedules up to length %s", len(schedules), max_len)
    return schedules


def check_schedule(graph: TransitionGraph, nodes: Iterable[int]) -> Schedule:
    """Validate a closed walk, which may revisit nodes, and compose its maps."""
    try:
        walk = [int(node) for node in nodes]
    except ValueError as ex:
        raise InvalidScheduleException(f"Schedule nodes must be integers: {ex}") from ex
    if len(walk) < 2 or walk[0] != walk[-1]:
        raise InvalidScheduleException(f"Schedule {walk} is not closed")
    for u, v in zip(walk, walk[1:]):
        if u not in graph.specs or v not in graph.specs:
            raise InvalidScheduleException(f"Unknown phase in schedule {walk}")
        if u != v and not graph.graph.has_edge(u, v):
            raise IllegalTransitionException(u, v)
    return _finish(graph, walk)


def tree_paths(
    graph: TransitionGraph, max_len: int = DEFAULT_MAX_SCHEDULE_LEN
) -> list[tuple[int, ...]]:
    """Non-periodic schedules: simple paths with at most max_len steps."""
    paths = set()
    nodes = sorted(graph.specs)
    for position, u in enumerate(nodes):
        for v in nodes[position + 1 :]:
            for path in nx.all_simple_paths(graph.graph, u, v, cutoff=max_len):
                paths.add(tuple(path))
    return sorted(paths, key=lambda p: (len(p), p))


def to_dot(graph: TransitionGraph) -> str:
    """Render the transition graph as DOT text."""
    lines = ["graph transitions {"]
    for node, spec in graph.specs.items():
        lines.append(f'  {node} [label="{node}: {spec.M.label}/{spec.N.label}"];')
    for u, v in graph.edges:
        lines.append(f"  {u} -- {v};")
    lines.append("}")
    return "\n".join(lines)
