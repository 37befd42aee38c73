"""
State-vector simulation of derived phases on a small torus.

SPDX-License-Identifier: Apache-2.0

Abelian groups only. Every edge carries a |G|-level qudit; the state is a dense
tensor with one axis per edge. Vertex, plaquette and edge terms of the
commuting projector model H^{M,N} are applied as edge-local kernels.
"""

import csv
from dataclasses import dataclass, field
from functools import lru_cache
import io
import logging
from typing import Any, Callable, NamedTuple, Optional, Sequence, Union

import numpy as np

from .condensation import PhaseSpec
from .const import (
    DEFAULT_NORM_FLOOR,
    DEFAULT_OPERATOR_TOLERANCE,
    DEFAULT_SEED,
    DEFAULT_STATE_QUBIT_CAP,
    MEASURE_QUOTIENT,
    MEASURE_RESTRICT,
)
from .exceptions import (
    IllegalTransitionException,
    InvalidLatticeException,
    MeasurementException,
    NonAbelianGroupException,
    StateCapExceededException,
)
from .floquet import (
    branch_frames,
    coset_frame,
    frame_matching_unitary,
    is_legal_transition,
    overlap_matrix,
    quotient_projector,
    restrict_projector,
)
from .group import FiniteGroup

_LOGGER = logging.getLogger(__name__)

LogicalSpec = Union[int, str, Sequence[complex], None]


def _require_abelian(group: FiniteGroup) -> None:
    if not group.is_abelian:
        raise NonAbelianGroupException(
            f"{group} is not abelian; the lattice simulator needs an abelian group"
        )


class EdgeOps(NamedTuple):
    """Single-edge operators for one group element."""

    shift: np.ndarray
    shift_inverse: np.ndarray
    projector: np.ndarray


def edge_ops(group: FiniteGroup, element: Union[int, str]) -> EdgeOps:
    """Return L^h, its inverse L^{h⁻¹} and T^h = |h⟩⟨h| as dense matrices.

    L^h|g⟩ = |hg⟩; left and right multiplication agree for abelian groups.
    """
    _require_abelian(group)
    h = group.element_index(element)
    everything = np.arange(group.order)
    shift = np.zeros((group.order, group.order))
    shift[group.mul[h, everything], everything] = 1.0
    projector = np.zeros((group.order, group.order))
    projector[h, h] = 1.0
    return EdgeOps(shift, shift.T.copy(), projector)


class TorusLattice:
    """Square lattice on a width × height torus.

    Horizontal edge h(x, y) runs (x, y) → (x+1, y) and vertical edge v(x, y)
    runs (x, y) → (x, y+1). The plaquette at (x, y) has holonomy
    h(x, y)·v(x+1, y)·h(x, y+1)⁻¹·v(x, y)⁻¹.
    """

    def __init__(self, width: int, height: int) -> None:
        if width < 2 or height < 2:
            raise InvalidLatticeException(
                f"Torus {width}x{height} is too small; both sides need at least 2"
            )
        self.width = width
        self.height = height

    def __repr__(self) -> str:
        return f"TorusLattice({self.width}x{self.height})"

    @classmethod
    def parse(cls, text: str) -> "TorusLattice":
        """Parse "WxH"."""
        try:
            width, height = (int(part) for part in text.lower().split("x"))
        except ValueError as ex:
            raise InvalidLatticeException(f"Invalid torus size {text!r}") from ex
        return cls(width, height)

    @property
    def num_edges(self) -> int:
        """Return 2·w·h."""
        return 2 * self.width * self.height

    def horizontal(self, x: int, y: int) -> int:
        """Return the index of h(x, y)."""
        return (y % self.height) * self.width + x % self.width

    def vertical(self, x: int, y: int) -> int:
        """Return the index of v(x, y)."""
        return (
            self.width * self.height
            + (y % self.height) * self.width
            + x % self.width
        )

    @property
    def vertices(self) -> list[tuple[int, int]]:
        """Return vertex coordinates row by row."""
        return [(x, y) for y in range(self.height) for x in range(self.width)]

    plaquettes = vertices

    def star(self, x: int, y: int) -> list[tuple[int, int]]:
        """Return (edge, sign) pairs at a vertex; +1 for edges leaving it."""
        return [
            (self.horizontal(x, y), 1),
            (self.vertical(x, y), 1),
            (self.horizontal(x - 1, y), -1),
            (self.vertical(x, y - 1), -1),
        ]

    def boundary(self, x: int, y: int) -> list[tuple[int, int]]:
        """Return (edge, sign) pairs around a plaquette in holonomy order."""
        return [
            (self.horizontal(x, y), 1),
            (self.vertical(x + 1, y), 1),
            (self.horizontal(x, y + 1), -1),
            (self.vertical(x, y), -1),
        ]

    @property
    def row_cycle(self) -> list[int]:
        """Return the horizontal edges of row y = 0."""
        return [self.horizontal(x, 0) for x in range(self.width)]

    @property
    def column_cycle(self) -> list[int]:
        """Return the vertical edges of column x = 0."""
        return [self.vertical(0, y) for y in range(self.height)]

    @property
    def sites(self) -> list[tuple[tuple[int, int], tuple[int, int]]]:
        """Return (vertex, plaquette) pairs sharing the lower left corner."""
        return [(vertex, vertex) for vertex in self.vertices]


@dataclass
class StateVector:
    """Dense amplitudes over G^E, one tensor axis per edge."""

    group: FiniteGroup
    lattice: TorusLattice
    amplitudes: np.ndarray = field(repr=False)

    @classmethod
    def uniform(
        cls,
        group: FiniteGroup,
        lattice: TorusLattice,
        qubit_cap: int = DEFAULT_STATE_QUBIT_CAP,
    ) -> "StateVector":
        """Return the product of uniform superpositions on every edge."""
        _require_abelian(group)
        qubits = lattice.num_edges * np.log2(group.order)
        if qubits > qubit_cap:
            raise StateCapExceededException(qubits, qubit_cap)
        shape = (group.order,) * lattice.num_edges
        amplitudes = np.full(shape, group.order ** (-lattice.num_edges / 2), complex)
        return cls(group, lattice, amplitudes)

    @property
    def norm(self) -> float:
        """Return the 2-norm."""
        return float(np.linalg.norm(self.amplitudes.ravel()))

    def copy(self) -> "StateVector":
        """Return an independent copy."""
        return StateVector(self.group, self.lattice, self.amplitudes.copy())

    def normalized(self) -> "StateVector":
        """Return the state scaled to norm 1."""
        norm = self.norm
        if norm < DEFAULT_NORM_FLOOR:
            raise MeasurementException(f"State norm {norm:.3g} vanished")
        return StateVector(self.group, self.lattice, self.amplitudes / norm)

    def overlap(self, other: "StateVector") -> complex:
        """Return ⟨self|other⟩."""
        return complex(np.vdot(self.amplitudes.ravel(), other.amplitudes.ravel()))


def fidelity(first: StateVector, second: StateVector) -> float:
    """Return |⟨a|b⟩|² of two normalized states."""
    return abs(first.overlap(second)) ** 2


def apply_edge(amplitudes: np.ndarray, matrix: np.ndarray, edge: int) -> np.ndarray:
    """Apply a single-edge matrix to one tensor axis."""
    return np.moveaxis(np.tensordot(matrix, amplitudes, axes=([1], [edge])), 0, edge)


def apply_diagonal(
    amplitudes: np.ndarray, edges: Sequence[int], mask: np.ndarray
) -> np.ndarray:
    """Multiply by a diagonal operator given on a few distinct edges."""
    order = np.argsort(edges)
    shape = [1] * amplitudes.ndim
    for edge in edges:
        shape[edge] = mask.shape[0]
    return amplitudes * mask.transpose(order).reshape(shape)


def _shift(amplitudes: np.ndarray, group: FiniteGroup, edge: int, h: int) -> np.ndarray:
    # new[h·g] = old[g]
    return np.take(amplitudes, group.mul[group.inverse[h]], axis=edge)


def _products(group: FiniteGroup, signs: Sequence[int]) -> np.ndarray:
    """Array [g1, g2, ...] of g1^{s1}·g2^{s2}·... for abelian groups."""
    result = np.zeros((), dtype=np.int64)
    everything = np.arange(group.order)
    for sign in signs:
        factor = everything if sign > 0 else group.inverse
        result = group.mul[result[..., None], factor]
    return result


class Term(NamedTuple):
    """Projector of the Hamiltonian acting on a few edges."""

    name: str
    edges: tuple[int, ...]
    apply: Callable[[np.ndarray], np.ndarray]


def _vertex_term(
    lattice: TorusLattice,
    group: FiniteGroup,
    vertex: tuple[int, int],
    elements: Sequence[int],
    name: str,
) -> Term:
    star = lattice.star(*vertex)

    def apply(amplitudes: np.ndarray) -> np.ndarray:
        total = np.zeros_like(amplitudes)
        for m in elements:
            moved = amplitudes
            for edge, sign in star:
                moved = _shift(moved, group, edge, m if sign > 0 else group.inverse[m])
            total += moved
        return total / len(elements)

    return Term(name, tuple(edge for edge, _ in star), apply)


def _plaquette_term(
    lattice: TorusLattice,
    group: FiniteGroup,
    plaquette: tuple[int, int],
    allowed: np.ndarray,
    name: str,
) -> Term:
    boundary = lattice.boundary(*plaquette)
    edges = [edge for edge, _ in boundary]
    mask = allowed[_products(group, [sign for _, sign in boundary])].astype(float)
    return Term(name, tuple(edges), lambda a: apply_diagonal(a, edges, mask))


def _edge_term(edge: int, matrix: np.ndarray, name: str) -> Term:
    return Term(name, (edge,), lambda a: apply_edge(a, matrix, edge))


def site_projectors(lattice: TorusLattice, spec: PhaseSpec) -> dict[str, list[Term]]:
    """Return the A_v^M, B_p^N, T_e^M and L_e^N terms of H^{M,N}."""
    group = spec.group
    _require_abelian(group)
    restrict = restrict_projector(spec)
    average = quotient_projector(spec)
    return {
        "A": [
            _vertex_term(lattice, group, v, spec.M.elements, f"A{v}")
            for v in lattice.vertices
        ],
        "B": [
            _plaquette_term(lattice, group, p, spec.N.mask, f"B{p}")
            for p in lattice.plaquettes
        ],
        MEASURE_RESTRICT: [
            _edge_term(e, restrict, f"T{e}") for e in range(lattice.num_edges)
        ],
        MEASURE_QUOTIENT: [
            _edge_term(e, average, f"L{e}") for e in range(lattice.num_edges)
        ],
    }


def _all_terms(lattice: TorusLattice, spec: PhaseSpec) -> list[Term]:
    return [term for terms in site_projectors(lattice, spec).values() for term in terms]


def _coset_of_product(group: FiniteGroup, spec: PhaseSpec, length: int) -> np.ndarray:
    membership = spec.quotient.decomposition.membership
    return membership[_products(group, [1] * length)]


def logical_projector(
    lattice: TorusLattice, spec: PhaseSpec, sector: tuple[int, int]
) -> Callable[[np.ndarray], np.ndarray]:
    """Projector onto the flux sector (q_x, q_y) ∈ (M/N)².

    q_x is the coset of the holonomy along row y = 0 and q_y the coset along
    column x = 0.
    """
    group = spec.group
    row, column = lattice.row_cycle, lattice.column_cycle
    row_mask = (_coset_of_product(group, spec, len(row)) == sector[0]).astype(float)
    column_mask = (_coset_of_product(group, spec, len(column)) == sector[1]).astype(
        float
    )

    def apply(amplitudes: np.ndarray) -> np.ndarray:
        return apply_diagonal(
            apply_diagonal(amplitudes, row, row_mask), column, column_mask
        )

    return apply


def _project_ground(
    state: np.ndarray, lattice: TorusLattice, spec: PhaseSpec
) -> np.ndarray:
    for term in _all_terms(lattice, spec):
        state = term.apply(state)
    return state


def _sector_states(
    lattice: TorusLattice, spec: PhaseSpec, qubit_cap: int
) -> list[Optional[np.ndarray]]:
    return _cached_sector_states(lattice.width, lattice.height, spec, qubit_cap)


@lru_cache(maxsize=32)
def _cached_sector_states(
    width: int, height: int, spec: PhaseSpec, qubit_cap: int
) -> list[Optional[np.ndarray]]:
    lattice = TorusLattice(width, height)
    reference = StateVector.uniform(spec.group, lattice, qubit_cap).amplitudes
    ground = _project_ground(reference, lattice, spec)
    q = spec.quotient_order
    states = []
    for qx in range(q):
        for qy in range(q):
            projected = logical_projector(lattice, spec, (qx, qy))(ground)
            norm = np.linalg.norm(projected.ravel())
            states.append(projected / norm if norm > DEFAULT_NORM_FLOOR else None)
    return states


def _logical_vector(logical: LogicalSpec, size: int, seed: int) -> np.ndarray:
    if logical is None:
        vector = np.ones(size, dtype=complex)
    elif isinstance(logical, (int, np.integer)):
        if not 0 <= logical < size:
            raise InvalidLatticeException(
                f"Logical index {logical} outside 0..{size - 1}"
            )
        vector = np.zeros(size, dtype=complex)
        vector[logical] = 1.0
    elif isinstance(logical, str):
        if logical != "random":
            if not logical.strip().isdigit():
                raise InvalidLatticeException(f"Unknown logical state {logical!r}")
            return _logical_vector(int(logical), size, seed)
        rng = np.random.default_rng(seed)
        vector = rng.normal(size=size) + 1j * rng.normal(size=size)
    else:
        vector = np.asarray(logical, dtype=complex)
        if vector.shape != (size,):
            raise InvalidLatticeException(
                f"Logical vector needs {size} amplitudes, got {vector.shape}"
            )
    norm = np.linalg.norm(vector)
    if norm < DEFAULT_NORM_FLOOR:
        raise InvalidLatticeException("Logical vector vanishes")
    return vector / norm


def ground_state(
    lattice: TorusLattice,
    spec: PhaseSpec,
    logical: LogicalSpec = 0,
    seed: int = DEFAULT_SEED,
    qubit_cap: int = DEFAULT_STATE_QUBIT_CAP,
) -> StateVector:
    """Project the uniform reference state onto the code space of H^{M,N}.

    The logical state is a flux sector index qx·|Q| + qy, "random", an
    amplitude vector over the |Q|² sectors, or None for the equal superposition
    of the normalized flux sectors.
    """
    _require_abelian(spec.group)
    sectors = _sector_states(lattice, spec, qubit_cap)
    vector = _logical_vector(logical, len(sectors), seed)
    amplitudes = np.zeros((spec.group.order,) * lattice.num_edges, dtype=complex)
    for coefficient, sector in zip(vector, sectors):
        if coefficient == 0:
            continue
        if sector is None:
            raise MeasurementException("Logical frame annihilated by the projectors")
        amplitudes += coefficient * sector
    return StateVector(spec.group, lattice, amplitudes).normalized()


def ground_space_dimension(
    lattice: TorusLattice,
    spec: PhaseSpec,
    seed: int = DEFAULT_SEED,
    qubit_cap: int = DEFAULT_STATE_QUBIT_CAP,
) -> int:
    """Rank of the code space projector, sampled with random states."""
    template = StateVector.uniform(spec.group, lattice, qubit_cap).amplitudes
    rng = np.random.default_rng(seed)
    samples = spec.quotient_order**2 + 4
    columns = []
    for _ in range(samples):
        state = rng.normal(size=template.shape) + 1j * rng.normal(size=template.shape)
        columns.append(_project_ground(state, lattice, spec).ravel())
    return int(np.linalg.matrix_rank(np.stack(columns, axis=1), tol=1e-8))


def stabilizer_expectations(state: StateVector, spec: PhaseSpec) -> dict[str, float]:
    """Return ⟨ψ|P|ψ⟩ for every term of H^{M,N}."""
    amplitudes = state.amplitudes
    return {
        term.name: float(np.real(np.vdot(amplitudes, term.apply(amplitudes))))
        for term in _all_terms(state.lattice, spec)
    }


def _random_state(template: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return rng.normal(size=template.shape) + 1j * rng.normal(size=template.shape)


def check_hamiltonian_terms(
    lattice: TorusLattice, spec: PhaseSpec, seed: int = DEFAULT_SEED
) -> dict[str, float]:
    """Largest idempotence and commutator residuals over overlapping terms.

    Operator identities are tested on a random state; disjoint terms commute
    trivially.
    """
    template = StateVector.uniform(spec.group, lattice).amplitudes
    state = _random_state(template, np.random.default_rng(seed))
    terms = _all_terms(lattice, spec)
    images = [term.apply(state) for term in terms]
    idempotence = max(
        float(np.abs(term.apply(image) - image).max())
        for term, image in zip(terms, images)
    )
    commutator = 0.0
    for i, first in enumerate(terms):
        for j in range(i + 1, len(terms)):
            second = terms[j]
            if not set(first.edges) & set(second.edges):
                continue
            residual = np.abs(first.apply(images[j]) - second.apply(images[i])).max()
            commutator = max(commutator, float(residual))
    return {"idempotence": idempotence, "commutator": commutator}


@dataclass
class OperatorAlgebraReport:
    """Residuals of the site algebra identities."""

    residuals: dict[str, float]
    tolerance: float = DEFAULT_OPERATOR_TOLERANCE

    @property
    def ok(self) -> bool:
        """Return whether every residual is within tolerance."""
        return all(value <= self.tolerance for value in self.residuals.values())


def check_operator_algebra(
    lattice: TorusLattice,
    spec: PhaseSpec,
    seed: int = DEFAULT_SEED,
    tolerance: float = DEFAULT_OPERATOR_TOLERANCE,
) -> OperatorAlgebraReport:
    """Verify the A^{hN}/B^{gN} site algebra on the first site of the torus.

    A^{hN} = (1/|N|)·Σ_n A^{hn} and B^{gN} projects onto plaquette holonomy in
    gN. Checked: A^{hN}A^{h'N} = A^{hh'N}, B^{gN}B^{g'N} = δ·B^{gN},
    A^{hN}B^{gN} = B^{gN}A^{hN} and the composite product rule.
    """
    group = spec.group
    _require_abelian(group)
    vertex, plaquette = lattice.sites[0]
    decomposition = spec.quotient.decomposition
    cosets = decomposition.cosets
    a_ops = [
        _vertex_term(lattice, group, vertex, [group.mul[h, n] for n in spec.N], "A")
        for h in decomposition.representatives
    ]
    b_ops = [
        _plaquette_term(lattice, group, plaquette, decomposition.masks[index], "B")
        for index in range(len(cosets))
    ]
    quotient = spec.quotient
    template = StateVector.uniform(group, lattice).amplitudes
    state = _random_state(template, np.random.default_rng(seed))
    residuals = dict.fromkeys(
        ("A-product", "B-orthogonal", "AB-exchange", "composite"), 0.0
    )

    def bump(key: str, left: np.ndarray, right: np.ndarray) -> None:
        residuals[key] = max(residuals[key], float(np.abs(left - right).max()))

    count = len(cosets)
    for h in range(count):
        for k in range(count):
            hk = quotient.mul[h, k]
            bump(
                "A-product",
                a_ops[h].apply(a_ops[k].apply(state)),
                a_ops[hk].apply(state),
            )
            expected = b_ops[h].apply(state) if h == k else np.zeros_like(state)
            bump("B-orthogonal", b_ops[h].apply(b_ops[k].apply(state)), expected)
            bump(
                "AB-exchange",
                a_ops[h].apply(b_ops[k].apply(state)),
                b_ops[k].apply(a_ops[h].apply(state)),
            )
            for g in range(count):
                for g2 in range(count):
                    left = a_ops[h].apply(
                        b_ops[g].apply(a_ops[k].apply(b_ops[g2].apply(state)))
                    )
                    right = (
                        a_ops[hk].apply(b_ops[g].apply(state))
                        if g == g2
                        else np.zeros_like(state)
                    )
                    bump("composite", left, right)
    report = OperatorAlgebraReport(residuals, tolerance)
    _LOGGER.debug("%s: operator algebra residuals %s", spec.key, residuals)
    return report


class MeasurementEntry(NamedTuple):
    """One single-edge measurement."""

    step: int
    edge: int
    tag: str
    outcome: int
    corrected: bool


@dataclass
class MeasurementRecord:
    """Ordered measurement outcomes of a schedule run."""

    seed: int
    entries: list[MeasurementEntry] = field(default_factory=list)

    def append(self, entry: MeasurementEntry) -> None:
        """Add an entry."""
        self.entries.append(entry)

    @property
    def outcomes(self) -> list[int]:
        """Return the outcomes in measurement order."""
        return [entry.outcome for entry in self.entries]

    def as_dict(self) -> dict[str, Any]:
        """Return a JSON serializable view."""
        return {
            "seed": self.seed,
            "entries": [entry._asdict() for entry in self.entries],
        }


def measure(
    state: StateVector,
    edge: int,
    projector: np.ndarray,
    rng: np.random.Generator,
) -> tuple[int, StateVector]:
    """Measure {P, 1 - P} on one edge by the Born rule.

    Returns outcome 1 for P and 0 for its complement with the projected,
    renormalized state.
    """
    kept = apply_edge(state.amplitudes, projector, edge)
    probability = float(np.real(np.vdot(kept, kept)))
    outcome = 1 if rng.random() < probability else 0
    if not outcome:
        kept = state.amplitudes - kept
    norm = np.linalg.norm(kept.ravel())
    if norm < DEFAULT_NORM_FLOOR:
        raise MeasurementException(
            f"Edge {edge}: outcome {outcome} left a vanishing state"
        )
    return outcome, StateVector(state.group, state.lattice, kept / norm)


class StepCorrections(NamedTuple):
    """Projectors and unwanted-outcome corrections of one phase transition."""

    restrict: np.ndarray
    restrict_fix: Optional[np.ndarray]
    average: np.ndarray
    average_fix: Optional[np.ndarray]


def step_corrections(source: PhaseSpec, target: PhaseSpec) -> StepCorrections:
    """Build the per-qudit corrections for source → target.

    Each correction maps the unwanted-outcome frame onto the preferred one.
    Transitions whose branch frames are not orthogonal get no correction.
    """
    restrict = restrict_projector(target)
    average = quotient_projector(target)
    fixes: list[Optional[np.ndarray]] = []
    frame = coset_frame(source)
    for projector in (restrict, average):
        try:
            preferred, unwanted = branch_frames(frame, projector)
        except ValueError:
            _LOGGER.debug("%s -> %s: no correction available", source.key, target.key)
            fixes.append(None)
            frame = projector @ frame
            continue
        fixes.append(
            None
            if unwanted is None or preferred is None
            else frame_matching_unitary(unwanted, preferred)
        )
        frame = preferred if preferred is not None else projector @ frame
    return StepCorrections(restrict, fixes[0], average, fixes[1])


def correction(
    state: StateVector, edge: int, outcome: int, fix: Optional[np.ndarray]
) -> tuple[StateVector, bool]:
    """Apply the correction for an unwanted outcome; no-op for outcome 1."""
    if outcome or fix is None:
        return state, False
    amplitudes = apply_edge(state.amplitudes, fix, edge)
    return StateVector(state.group, state.lattice, amplitudes), True


def _sector_map(source: PhaseSpec, target: PhaseSpec) -> np.ndarray:
    """Coset permutation read off the overlap matrix, strongest overlap first."""
    return np.argmax(overlap_matrix(source, target).entries, axis=0)


def _map_logical(vector: np.ndarray, mapping: np.ndarray) -> np.ndarray:
    q = len(mapping)
    mapped = np.zeros_like(vector)
    for qx in range(q):
        for qy in range(q):
            mapped[mapping[qx] * q + mapping[qy]] += vector[qx * q + qy]
    norm = np.linalg.norm(mapped)
    return mapped / norm if norm > DEFAULT_NORM_FLOOR else mapped


class TraceRow(NamedTuple):
    """Fidelity after one schedule step."""

    step: int
    source: str
    target: str
    legal: bool
    fidelity: float
    min_stabilizer: float


@dataclass
class ScheduleRun:
    """Result of run_schedule."""

    trace: list[TraceRow]
    record: MeasurementRecord
    state: StateVector = field(repr=False)

    @property
    def final_fidelity(self) -> float:
        """Return the fidelity after the last step."""
        return self.trace[-1].fidelity if self.trace else 1.0


def run_schedule(
    lattice: TorusLattice,
    specs: Sequence[PhaseSpec],
    logical: LogicalSpec = 0,
    seed: int = DEFAULT_SEED,
    allow_illegal: bool = False,
    qubit_cap: int = DEFAULT_STATE_QUBIT_CAP,
) -> ScheduleRun:
    """Walk through a sequence of phases by single-edge measurements.

    Each step measures T^{M'} on every edge, then L^{N'} on every edge, in
    edge order, correcting unwanted outcomes. After each step the state is
    compared with the ground state of the new phase holding the mapped
    logical state.
    """
    if not specs:
        raise InvalidLatticeException("Empty schedule")
    group = specs[0].group
    _require_abelian(group)
    size = specs[0].quotient_order ** 2
    vector = _logical_vector(logical, size, seed)
    state = ground_state(lattice, specs[0], vector, qubit_cap=qubit_cap)
    rng = np.random.default_rng(seed)
    record = MeasurementRecord(seed)
    trace = []
    for step, (source, target) in enumerate(zip(specs, specs[1:]), 1):
        legal = is_legal_transition(source, target)
        if not legal and not allow_illegal:
            raise IllegalTransitionException(source.label, target.label)
        plan = step_corrections(source, target)
        sweeps = (
            (MEASURE_RESTRICT, plan.restrict, plan.restrict_fix),
            (MEASURE_QUOTIENT, plan.average, plan.average_fix),
        )
        for tag, projector, fix in sweeps:
            for edge in range(lattice.num_edges):
                outcome, state = measure(state, edge, projector, rng)
                state, corrected = correction(state, edge, outcome, fix)
                record.append(MeasurementEntry(step, edge, tag, outcome, corrected))
        state = state.normalized()
        vector = _map_logical(vector, _sector_map(source, target))
        expected = ground_state(lattice, target, vector, qubit_cap=qubit_cap)
        stabilizers = stabilizer_expectations(state, target)
        row = TraceRow(
            step,
            source.label,
            target.label,
            legal,
            fidelity(expected, state),
            min(stabilizers.values()),
        )
        _LOGGER.debug(
            "Step %s %s -> %s: fidelity %.12f",
            step,
            row.source,
            row.target,
            row.fidelity,
        )
        trace.append(row)
    return ScheduleRun(trace, record, state)


def fidelity_trace_csv(trace: Sequence[TraceRow]) -> str:
    """Render a fidelity trace as CSV with a header row."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TraceRow._fields)
    for row in trace:
        writer.writerow(
            [
                row.step,
                row.source,
                row.target,
                int(row.legal),
                f"{row.fidelity:.12f}",
                f"{row.min_stabilizer:.12f}",
            ]
        )
    return buffer.getvalue()
