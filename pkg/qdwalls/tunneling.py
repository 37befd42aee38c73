"""
Anyon tunneling between derived phases.

SPDX-License-Identifier: Apache-2.0

A domain wall between D(M/N) and D(M'/N') inside the parent D(G) carries a
tunneling character on pairs (h2·g2*, h1·g1*) of the two quotient doubles. The
full character is evaluated once per problem as a dense tensor over coset
representatives and decomposed into products of anyon characters to give the
tunneling map φ[target, source].
"""

from dataclasses import dataclass, field
from functools import lru_cache
import logging
from typing import Any, Optional, Sequence, Union

import numpy as np

from .condensation import PhaseSpec
from .const import DEFAULT_TOLERANCE
from .exceptions import (
    NonAbelianGroupException,
    PathDisagreementException,
    ShapeMismatchException,
)
from .group import FiniteGroup, QuotientGroup, Subgroup, double_cosets
from .helpers import cache_key, load_cached_array, round_to_int, store_cached_array
from .qdouble import ModularData, QuantumDouble, format_combination, quantum_double

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class TunnelingProblem:
    """Wall between a left phase (M', N') and a right phase (M, N)."""

    group: FiniteGroup
    left: PhaseSpec
    right: PhaseSpec
    quotiented_by_ncap: bool = False

    def __post_init__(self) -> None:
        if self.left.group is not self.group or self.right.group is not self.group:
            raise ShapeMismatchException("Both phases must live in the same group")

    @property
    def ncap(self) -> Subgroup:
        """Return N ∩ N'."""
        return self.left.N.intersection(self.right.N)


def tunneling_problem(
    group: FiniteGroup, left: Sequence[Any], right: Sequence[Any]
) -> TunnelingProblem:
    """Build a problem from (M', N') and (M, N) subgroup specs."""
    return TunnelingProblem(
        group, PhaseSpec(group, *left[:2]), PhaseSpec(group, *right[:2])
    )


def _project(quotient: QuotientGroup, subgroup: Subgroup) -> list[int]:
    return sorted({quotient.project(element) for element in subgroup.elements})


def reduce_by_ncap(problem: TunnelingProblem) -> TunnelingProblem:
    """Replace G, M, N, M', N' by their quotients by N ∩ N'.

    Unchanged when N ∩ N' is trivial; skipped with a warning when N ∩ N' is
    not normal in G.
    """
    ncap = problem.ncap
    if ncap.is_trivial:
        return problem
    if not ncap.is_normal:
        _LOGGER.warning(
            "N ∩ N' = %s is not normal in G; using the unreduced problem", ncap.label
        )
        return problem
    reduced = QuotientGroup(problem.group.whole, ncap)
    phases = []
    for phase in (problem.left, problem.right):
        phases.append(
            PhaseSpec(
                reduced,
                _project(reduced, phase.M),
                _project(reduced, phase.N),
                phase.name,
            )
        )
    _LOGGER.debug(
        "Reduced %s | %s by %s to order %s",
        problem.left.key,
        problem.right.key,
        ncap.label,
        reduced.order,
    )
    return TunnelingProblem(reduced, phases[0], phases[1], quotiented_by_ncap=True)


def _double_coset_masks(left: Subgroup, right: Subgroup) -> np.ndarray:
    """Boolean array [g, y] of y ∈ left·g·right."""
    decomposition = double_cosets(left, right)
    masks = decomposition.masks
    return masks[decomposition.membership]


def _character_tensor(problem: TunnelingProblem) -> np.ndarray:
    """Tunneling character over quotient elements, indexed [h2, g2, h1, g1]."""
    group = problem.group
    mul = group.mul
    inverse = group.inverse
    left, right = problem.left, problem.right
    h2 = g2 = np.array(left.quotient.representatives)
    h1 = g1 = np.array(right.quotient.representatives)
    n_left, n_right = left.N, right.N

    # Pairs (h, g) with h ∈ M' and g⁻¹hg ∈ M.
    conjugated = group.conjugation[inverse]
    allowed = left.M.mask[None, :] & right.M.mask[conjugated]
    gs, hs = np.nonzero(allowed)
    moved = conjugated[gs, hs]

    wall = _double_coset_masks(n_right, n_left)
    across = mul[mul[h2[:, None], gs[None, :]][:, None, :], inverse[h1][None, :, None]]
    in_double_coset = wall[gs[None, None, :], across]
    in_left = n_left.mask[mul[np.ix_(g2, hs)]]
    in_right = n_right.mask[mul[np.ix_(inverse[g1], moved)]]
    tensor = np.einsum(
        "xzs,ys,ws->xyzw",
        in_double_coset.astype(float),
        in_left.astype(float),
        in_right.astype(float),
    )

    left_commutes = n_left.mask[
        mul[inverse[mul[np.ix_(g2, h2)].T], mul[np.ix_(h2, g2)]]
    ]
    right_commutes = n_right.mask[
        mul[inverse[mul[np.ix_(g1, h1)].T], mul[np.ix_(h1, g1)]]
    ]
    tensor *= left_commutes[:, :, None, None] * right_commutes[None, None, :, :]
    return tensor / (n_left.order * n_right.order)


@lru_cache(maxsize=256)
def character_tensor(problem: TunnelingProblem) -> np.ndarray:
    """Memoized tunneling character tensor, also cached on disk when enabled."""
    group = problem.group
    key = cache_key(
        "tunneling-character",
        group.mul,
        problem.left.M.elements,
        problem.left.N.elements,
        problem.right.M.elements,
        problem.right.N.elements,
    )
    tensor = load_cached_array(key)
    if tensor is None:
        tensor = _character_tensor(problem)
        store_cached_array(key, tensor)
    tensor.flags.writeable = False
    return tensor


def chi_tunneling(
    problem: TunnelingProblem, h2: int, g2: int, h1: int, g1: int
) -> float:
    """Evaluate the tunneling character at group elements.

    h2, g2 must lie in M' and h1, g1 in M; each is replaced by the canonical
    representative of its coset before evaluation.
    """
    left, right = problem.left.quotient, problem.right.quotient
    return float(
        character_tensor(problem)[
            left.project(h2), left.project(g2), right.project(h1), right.project(g1)
        ]
    )


def character_sum(
    problem: TunnelingProblem, h2: int, g2: int, h1: int, g1: int
) -> float:
    """Evaluate the tunneling character term by term at the given elements."""
    group = problem.group
    mul, inverse = group.mul, group.inverse
    n_left, n_right = problem.left.N, problem.right.N
    if not n_left.mask[mul[inverse[mul[g2, h2]], mul[h2, g2]]]:
        return 0.0
    if not n_right.mask[mul[inverse[mul[g1, h1]], mul[h1, g1]]]:
        return 0.0
    total = 0
    for g in range(group.order):
        wall = {
            int(mul[mul[n, g], n_prime])
            for n in n_right.elements
            for n_prime in n_left.elements
        }
        for h in problem.left.M.elements:
            moved = mul[mul[inverse[g], h], g]
            if moved not in problem.right.M:
                continue
            if (
                n_right.mask[mul[inverse[g1], moved]]
                and n_left.mask[mul[g2, h]]
                and int(mul[mul[h2, g], inverse[h1]]) in wall
            ):
                total += 1
    return total / (n_left.order * n_right.order)


@dataclass
class TunnelingMap:
    """Integer matrix φ[target anyon, source anyon]."""

    matrix: np.ndarray
    source: QuantumDouble = field(repr=False)
    target: QuantumDouble = field(repr=False)
    problem: Optional[TunnelingProblem] = field(default=None, repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        """Return (targets, sources)."""
        return self.matrix.shape

    def image(self, anyon: Union[int, str]) -> str:
        """Render the image of a source anyon, e.g. "1+e"."""
        index = (
            self.source.anyon_by_name(anyon).index
            if isinstance(anyon, str)
            else int(anyon)
        )
        return format_combination(self.matrix[:, index], self.target.names)

    def images(self) -> dict[str, str]:
        """Return every source anyon name with its image."""
        return {name: self.image(i) for i, name in enumerate(self.source.names)}

    def format(self) -> str:
        """Render as one "C → 1+e" line per source anyon."""
        return "\n".join(f"{name} → {image}" for name, image in self.images().items())

    def confined(self) -> list[str]:
        """Return the source anyons with a zero column."""
        return confined_anyons(self)

    def as_dict(self) -> dict[str, Any]:
        """Return a JSON serializable view."""
        return {
            "source": self.source.names,
            "target": self.target.names,
            "matrix": self.matrix.tolist(),
            "images": self.images(),
            "confined": self.confined(),
        }


def _raw_map(
    problem: TunnelingProblem,
) -> tuple[np.ndarray, QuantumDouble, QuantumDouble]:
    target = quantum_double(problem.left.quotient)
    source = quantum_double(problem.right.quotient)
    tensor = character_tensor(problem)
    raw = np.einsum(
        "pxy,qzw,xyzw->pq",
        target.characters.conj(),
        source.characters.conj(),
        tensor,
    ) / (target.group.order * source.group.order)
    labels = [f"{t}<-{s}" for t in target.names for s in source.names]
    matrix = round_to_int(raw[target.duals], labels=labels)
    return matrix, source, target


def tunneling_map(problem: TunnelingProblem, check_paths: bool = True) -> TunnelingMap:
    """Compute φ for the problem.

    The unreduced computation is authoritative; when N ∩ N' is nontrivial the
    reduced computation must agree exactly.
    """
    matrix, source, target = _raw_map(problem)
    if check_paths:
        reduced = reduce_by_ncap(problem)
        if reduced.quotiented_by_ncap:
            other, _, _ = _raw_map(reduced)
            if not np.array_equal(matrix, other):
                raise PathDisagreementException(
                    f"{problem.left.key} | {problem.right.key}: reduced and "
                    "unreduced tunneling maps disagree"
                )
    if matrix[0, 0] != 1:
        _LOGGER.warning(
            "%s | %s: vacuum tunnels with multiplicity %s",
            problem.left.key,
            problem.right.key,
            matrix[0, 0],
        )
    return TunnelingMap(matrix, source, target, problem)


def confined_anyons(phi: TunnelingMap) -> list[str]:
    """Return the source anyons whose image is zero."""
    return [
        phi.source.names[i] for i in np.flatnonzero(~phi.matrix.any(axis=0))
    ]


def is_valid_anyon_map(phi: Union[TunnelingMap, np.ndarray]) -> bool:
    """Return whether every source column is a 0/1 vector with exactly one 1."""
    matrix = np.asarray(phi.matrix if isinstance(phi, TunnelingMap) else phi)
    return bool(
        matrix.ndim == 2
        and np.isin(matrix, (0, 1)).all()
        and np.all(matrix.sum(axis=0) == 1)
    )


def is_automorphism(
    phi: Union[TunnelingMap, np.ndarray],
    modular: ModularData,
    fusion: np.ndarray,
    target_modular: Optional[ModularData] = None,
    target_fusion: Optional[np.ndarray] = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> bool:
    """Return whether φ is a permutation preserving S, T and fusion."""
    matrix = np.asarray(phi.matrix if isinstance(phi, TunnelingMap) else phi)
    target_modular = target_modular or modular
    target_fusion = fusion if target_fusion is None else target_fusion
    count = len(modular.t)
    if matrix.shape != (len(target_modular.t), count):
        raise ShapeMismatchException(
            f"Map of shape {matrix.shape} between {count} and "
            f"{len(target_modular.t)} anyons"
        )
    if matrix.shape[0] != matrix.shape[1]:
        raise ShapeMismatchException("Automorphism check needs a square map")
    if not (is_valid_anyon_map(matrix) and is_valid_anyon_map(matrix.T)):
        return False
    perm = matrix.astype(float)
    s_back = perm.T @ target_modular.s @ perm
    t_back = perm.T @ target_modular.t
    n_back = np.einsum("ia,jb,kc,ijk->abc", perm, perm, perm, target_fusion)
    return bool(
        np.abs(s_back - modular.s).max() <= tolerance
        and np.abs(t_back - modular.t).max() <= tolerance
        and np.array_equal(np.rint(n_back).astype(np.int64), fusion)
    )


def compose_maps(
    second: Union[TunnelingMap, np.ndarray], first: Union[TunnelingMap, np.ndarray]
) -> Union[TunnelingMap, np.ndarray]:
    """Return second ∘ first."""
    outer = np.asarray(second.matrix if isinstance(second, TunnelingMap) else second)
    inner = np.asarray(first.matrix if isinstance(first, TunnelingMap) else first)
    if outer.shape[1] != inner.shape[0]:
        raise ShapeMismatchException(
            f"Cannot compose maps of shapes {outer.shape} and {inner.shape}"
        )
    if isinstance(first, TunnelingMap) and isinstance(second, TunnelingMap):
        if first.target.names != second.source.names:
            raise ShapeMismatchException("Inner anyon sets differ")
        return TunnelingMap(outer @ inner, first.source, second.target)
    return outer @ inner


def em_duality(group: FiniteGroup) -> np.ndarray:
    """Electric-magnetic duality of D(Z_n) as a permutation [target, source]."""
    generators = np.flatnonzero(group.element_orders == group.order)
    if not group.is_abelian or not len(generators):
        raise NonAbelianGroupException(f"{group} is not cyclic")
    generator = int(generators[0])
    exponent = np.empty(group.order, dtype=np.int64)
    power = 0
    for step in range(group.order):
        exponent[power] = step
        power = group.mul[power, generator]
    double = quantum_double(group)
    n = group.order
    position = {}
    for anyon in double:
        angle = np.angle(double.chi(anyon, generator, anyon.representative))
        charge = int(np.rint(angle * n / (2 * np.pi))) % n
        position[(int(exponent[anyon.representative]), charge)] = anyon.index
    matrix = np.zeros((len(double), len(double)), dtype=np.int64)
    for (flux, charge), index in position.items():
        matrix[position[(charge, flux)], index] = 1
    return matrix

