"""
Finite groups for quantum double models.

SPDX-License-Identifier: Apache-2.0

Elements are dense integer indices and index 0 is always the identity. A
FiniteGroup owns its full multiplication table; subgroups, coset
decompositions, quotient groups and complex character tables are derived from
it and never modify it, so every object here can be shared freely between
workers once built.
"""

from collections import deque
from functools import cached_property, reduce
import itertools
import json
import logging
from pathlib import Path
import re
from typing import Any, Iterable, NamedTuple, Optional, Sequence, Union

import numpy as np
import voluptuous as vol

from .const import (
    DEFAULT_ORDER_CAP,
    DEFAULT_ROUNDING_RESIDUAL,
    DEFAULT_SEED,
    DEFAULT_TOLERANCE,
)
from .exceptions import (
    InvalidGroupException,
    NotNormalSubgroupException,
    NumericalFailureException,
    OrderCapExceededException,
    SchemaException,
)
from .helpers import retry_seeded

_LOGGER = logging.getLogger(__name__)

_TO_SUPERSCRIPT = str.maketrans("0123456789", "⁰¹²³⁴⁵⁶⁷⁸⁹")
_FROM_SUPERSCRIPT = str.maketrans("⁰¹²³⁴⁵⁶⁷⁸⁹", "0123456789")
_ASCII_ALIASES = {"τ": "t", "σ": "s"}

GROUP_SPEC_SCHEMA = vol.Schema(
    {
        vol.Exclusive("table", "source"): [[vol.Coerce(int)]],
        vol.Exclusive("permutations", "source"): [[vol.Coerce(int)]],
        vol.Exclusive("preset", "source"): str,
        vol.Optional("labels"): [str],
        vol.Optional("name"): str,
    }
)


def normalize_label(label: str) -> str:
    """Map a display label to its ASCII alias (τ²→t2, sr³→sr3)."""
    text = str(label).translate(_FROM_SUPERSCRIPT)
    for symbol, alias in _ASCII_ALIASES.items():
        text = text.replace(symbol, alias)
    return text.replace("^", "").replace(" ", "")


class ConjugacyClass(NamedTuple):
    """Conjugacy class with its smallest element as representative."""

    representative: int
    elements: tuple[int, ...]

    @property
    def size(self) -> int:
        """Return the number of elements."""
        return len(self.elements)


class FiniteGroup:
    """Finite group given by a validated multiplication table."""

    def __init__(
        self,
        table: Any,
        labels: Optional[Sequence[str]] = None,
        name: Optional[str] = None,
        order_cap: int = DEFAULT_ORDER_CAP,
    ) -> None:
        mul = np.array(table, dtype=np.int64)
        if mul.ndim != 2 or mul.shape[0] != mul.shape[1] or mul.shape[0] == 0:
            raise InvalidGroupException(
                f"Multiplication table must be square and nonempty, got {mul.shape}"
            )
        order = mul.shape[0]
        if order > order_cap:
            raise OrderCapExceededException(order, order_cap)
        if mul.min() < 0 or mul.max() >= order:
            raise InvalidGroupException("Multiplication table entries out of range")
        if labels is not None:
            labels = [str(label) for label in labels]
            if len(labels) != order:
                raise InvalidGroupException(
                    f"Expected {order} labels, got {len(labels)}"
                )
            if len(set(labels)) != order:
                raise InvalidGroupException("Element labels are not unique")
        identity = self._find_identity(mul)
        if identity != 0:
            _LOGGER.debug("Relabelling identity %s to index 0", identity)
            swap = np.arange(order)
            swap[0], swap[identity] = identity, 0
            mul = swap[mul[np.ix_(swap, swap)]]
            if labels is not None:
                labels = [labels[i] for i in swap]
        everything = np.arange(order)
        if not (
            np.all(np.sort(mul, axis=1) == everything)
            and np.all(np.sort(mul, axis=0) == everything[:, None])
        ):
            raise InvalidGroupException(
                "Multiplication table is not a Latin square, inverses are missing"
            )
        if not np.array_equal(mul[mul, :], mul[:, mul]):
            raise InvalidGroupException("Multiplication table is not associative")
        mul.flags.writeable = False
        inverse = np.argmax(mul == 0, axis=1)
        inverse.flags.writeable = False
        self.mul = mul
        self.inverse = inverse
        self.order = order
        self.order_cap = order_cap
        self.labels = labels if labels is not None else [str(i) for i in everything]
        self.name = name
        self._label_index = {label: i for i, label in enumerate(self.labels)}
        self._normalized_index = {
            normalize_label(label): i for i, label in enumerate(self.labels)
        }

    @staticmethod
    def _find_identity(mul: np.ndarray) -> int:
        everything = np.arange(mul.shape[0])
        for candidate in everything:
            if np.array_equal(mul[candidate], everything) and np.array_equal(
                mul[:, candidate], everything
            ):
                return int(candidate)
        raise InvalidGroupException("Multiplication table has no identity")

    def __repr__(self) -> str:
        return f"<FiniteGroup {self.name or '?'} order={self.order}>"

    def __len__(self) -> int:
        return self.order

    @property
    def identity(self) -> int:
        """Return the identity index."""
        return 0

    def label(self, element: int) -> str:
        """Return the display label of an element."""
        return self.labels[int(element)]

    def element_index(self, token: Union[int, str]) -> int:
        """Resolve a label, an ASCII alias or a bare index to an element."""
        if isinstance(token, (int, np.integer)):
            if 0 <= int(token) < self.order:
                return int(token)
            raise InvalidGroupException(f"Element index {token} out of range")
        text = str(token).strip()
        if text in self._label_index:
            return self._label_index[text]
        normalized = normalize_label(text)
        if normalized in self._normalized_index:
            return self._normalized_index[normalized]
        if normalized == "e":
            return 0
        if normalized.isdigit() and int(normalized) < self.order:
            return int(normalized)
        raise InvalidGroupException(
            f"Unknown element {token!r} in group {self.name or self.order}"
        )

    def multiply(self, left: int, right: int) -> int:
        """Return left·right."""
        return int(self.mul[left, right])

    def product(self, *elements: int) -> int:
        """Return the ordered product of elements."""
        return reduce(self.multiply, elements, 0)

    @cached_property
    def conjugation(self) -> np.ndarray:
        """Array of x·g·x⁻¹ indexed [x, g]."""
        result = self.mul[self.mul, self.inverse[:, None]]
        result.flags.writeable = False
        return result

    @cached_property
    def element_orders(self) -> np.ndarray:
        """Order of every element."""
        everything = np.arange(self.order)
        orders = np.zeros(self.order, dtype=np.int64)
        power = everything.copy()
        for exponent in range(1, self.order + 1):
            orders[(power == 0) & (orders == 0)] = exponent
            power = self.mul[power, everything]
        return orders

    @cached_property
    def is_abelian(self) -> bool:
        """Return whether the group is commutative."""
        return bool(np.array_equal(self.mul, self.mul.T))

    @cached_property
    def commutes(self) -> np.ndarray:
        """Boolean array [h, g] of gh = hg."""
        return self.mul == self.mul.T

    @cached_property
    def conjugacy_classes(self) -> list[ConjugacyClass]:
        """Conjugacy classes ordered by (element order, size, smallest element)."""
        seen = np.zeros(self.order, dtype=bool)
        classes = []
        for element in range(self.order):
            if seen[element]:
                continue
            members = tuple(int(x) for x in np.unique(self.conjugation[:, element]))
            seen[list(members)] = True
            classes.append(ConjugacyClass(element, members))
        classes.sort(
            key=lambda c: (
                int(self.element_orders[c.representative]),
                c.size,
                c.representative,
            )
        )
        return classes

    @cached_property
    def class_of(self) -> np.ndarray:
        """Class index of every element."""
        result = np.empty(self.order, dtype=np.int64)
        for index, conjugacy_class in enumerate(self.conjugacy_classes):
            result[list(conjugacy_class.elements)] = index
        return result

    def centralizer(self, element: int) -> "Subgroup":
        """Return {g : g·a = a·g}."""
        return Subgroup(self, np.flatnonzero(self.commutes[:, element]), check=False)

    @cached_property
    def whole(self) -> "Subgroup":
        """The group as a subgroup of itself."""
        return Subgroup(self, range(self.order), check=False)

    @cached_property
    def trivial(self) -> "Subgroup":
        """The trivial subgroup."""
        return Subgroup(self, [0], check=False)

    @cached_property
    def subgroups(self) -> list["Subgroup"]:
        """All subgroups, sorted by order and element list."""
        return subgroups(self)

    @cached_property
    def character_table(self) -> "CharacterTable":
        """Complex character table."""
        return character_table(self)


class Subgroup:
    """Subgroup given by a sorted element index set."""

    def __init__(
        self, parent: FiniteGroup, elements: Iterable[int], check: bool = True
    ) -> None:
        members = sorted({int(e) for e in elements})
        mask = np.zeros(parent.order, dtype=bool)
        mask[members] = True
        self.parent = parent
        self.elements = tuple(members)
        self.mask = mask
        if check:
            if not mask[0]:
                raise InvalidGroupException(
                    f"{self.label} does not contain the identity"
                )
            index = np.array(members)
            if not mask[parent.mul[np.ix_(index, index)]].all():
                raise InvalidGroupException(f"{self.label} is not closed")

    @property
    def order(self) -> int:
        """Return the number of elements."""
        return len(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, element: int) -> bool:
        return bool(self.mask[int(element)])

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Subgroup)
            and other.parent is self.parent
            and other.elements == self.elements
        )

    def __hash__(self) -> int:
        return hash((id(self.parent), self.elements))

    def __repr__(self) -> str:
        return f"Subgroup({self.label})"

    @property
    def label(self) -> str:
        """Return the subgroup as a set of element labels."""
        return "{" + ",".join(self.parent.label(e) for e in self.elements) + "}"

    @property
    def is_trivial(self) -> bool:
        """Return whether only the identity is present."""
        return self.order == 1

    def issubset(self, other: "Subgroup") -> bool:
        """Return whether every element lies in other."""
        return bool(other.mask[list(self.elements)].all())

    def is_normal_in(self, ambient: Optional["Subgroup"] = None) -> bool:
        """Return whether conjugation by the ambient subgroup preserves self."""
        ambient = ambient if ambient is not None else self.parent.whole
        conjugates = self.parent.conjugation[
            np.ix_(list(ambient.elements), list(self.elements))
        ]
        return bool(self.mask[conjugates].all())

    @property
    def is_normal(self) -> bool:
        """Return whether self is normal in its parent group."""
        return self.is_normal_in(self.parent.whole)

    def intersection(self, other: "Subgroup") -> "Subgroup":
        """Return self ∩ other."""
        return Subgroup(
            self.parent, np.flatnonzero(self.mask & other.mask), check=False
        )

    def join(self, other: "Subgroup") -> "Subgroup":
        """Return the subgroup generated by self and other."""
        return generate(self.parent, self.elements + other.elements)

    def conjugate(self, element: int) -> "Subgroup":
        """Return x·H·x⁻¹."""
        return Subgroup(
            self.parent,
            self.parent.conjugation[element, list(self.elements)],
            check=False,
        )

    @cached_property
    def local_index(self) -> np.ndarray:
        """Parent index to position in ``elements``; -1 outside."""
        result = np.full(self.parent.order, -1, dtype=np.int64)
        result[list(self.elements)] = np.arange(self.order)
        return result

    def as_group(self) -> FiniteGroup:
        """Return the subgroup as a standalone group with parent labels."""
        return self._as_group

    @cached_property
    def _as_group(self) -> FiniteGroup:
        index = np.array(self.elements)
        table = self.local_index[self.parent.mul[np.ix_(index, index)]]
        name = self.parent.name if self.order == self.parent.order else None
        return FiniteGroup(
            table,
            labels=[self.parent.label(e) for e in self.elements],
            name=name,
            order_cap=self.parent.order_cap,
        )


def generate(group: FiniteGroup, generators: Iterable[int]) -> Subgroup:
    """Return the subgroup generated by the given elements."""
    mask = np.zeros(group.order, dtype=bool)
    mask[0] = True
    mask[[int(g) for g in generators]] = True
    while True:
        index = np.flatnonzero(mask)
        grown = mask.copy()
        grown[group.mul[np.ix_(index, index)].ravel()] = True
        if np.array_equal(grown, mask):
            return Subgroup(group, index, check=False)
        mask = grown


def subgroups(group: FiniteGroup) -> list[Subgroup]:
    """Enumerate every subgroup as an iterated join of cyclic subgroups."""
    cyclic = {generate(group, [g]) for g in range(group.order)}
    found = set(cyclic)
    frontier = list(cyclic)
    while frontier:
        grown = []
        for subgroup in frontier:
            for generator in cyclic:
                if generator.issubset(subgroup):
                    continue
                joined = subgroup.join(generator)
                if joined not in found:
                    found.add(joined)
                    grown.append(joined)
        frontier = grown
    result = sorted(found, key=lambda s: (s.order, s.elements))
    _LOGGER.debug("%s: found %s subgroups", group, len(result))
    return result


def normal_subgroups_in(ambient: Subgroup) -> list[Subgroup]:
    """Return the subgroups of ambient that are normal in ambient."""
    return [
        subgroup
        for subgroup in ambient.parent.subgroups
        if subgroup.issubset(ambient) and subgroup.is_normal_in(ambient)
    ]


class CosetDecomposition:
    """Partition of an ambient subgroup into cosets."""

    def __init__(
        self,
        subgroup: Subgroup,
        side: str,
        ambient: Subgroup,
        cosets: list[tuple[int, ...]],
        right_subgroup: Optional[Subgroup] = None,
    ) -> None:
        membership = np.full(subgroup.parent.order, -1, dtype=np.int64)
        for index, coset in enumerate(cosets):
            membership[list(coset)] = index
        self.subgroup = subgroup
        self.right_subgroup = right_subgroup
        self.side = side
        self.ambient = ambient
        self.cosets = cosets
        self.representatives = [coset[0] for coset in cosets]
        self.membership = membership

    def __len__(self) -> int:
        return len(self.cosets)

    def coset_of(self, element: int) -> int:
        """Return the coset index of an element, -1 outside the ambient set."""
        return int(self.membership[element])

    @cached_property
    def masks(self) -> np.ndarray:
        """Boolean array [coset, element]."""
        result = np.zeros((len(self.cosets), self.subgroup.parent.order), dtype=bool)
        for index, coset in enumerate(self.cosets):
            result[index, list(coset)] = True
        return result


def _partition(ambient: Subgroup, orbit) -> list[tuple[int, ...]]:
    parent = ambient.parent
    assigned = np.zeros(parent.order, dtype=bool)
    cosets = []
    for element in ambient.elements:
        if assigned[element]:
            continue
        coset = tuple(int(x) for x in np.unique(orbit(element)))
        assigned[list(coset)] = True
        cosets.append(coset)
    return cosets


def cosets(
    subgroup: Subgroup, side: str = "left", ambient: Optional[Subgroup] = None
) -> CosetDecomposition:
    """Decompose the ambient subgroup (default: the parent) into cosets.

    Cosets are listed by their smallest element, which is also the
    representative, so the identity coset comes first.
    """
    parent = subgroup.parent
    ambient = ambient if ambient is not None else parent.whole
    if not subgroup.issubset(ambient):
        raise InvalidGroupException(f"{subgroup.label} is not inside {ambient.label}")
    index = list(subgroup.elements)
    if side == "left":
        partition = _partition(ambient, lambda g: parent.mul[g, index])
    elif side == "right":
        partition = _partition(ambient, lambda g: parent.mul[index, g])
    else:
        raise ValueError(f"Unknown coset side {side!r}")
    return CosetDecomposition(subgroup, side, ambient, partition)


def double_cosets(
    left: Subgroup, right: Subgroup, ambient: Optional[Subgroup] = None
) -> CosetDecomposition:
    """Decompose the ambient subgroup into double cosets left·g·right."""
    parent = left.parent
    ambient = ambient if ambient is not None else parent.whole
    left_index = list(left.elements)
    right_index = list(right.elements)
    partition = _partition(
        ambient,
        lambda g: parent.mul[np.ix_(parent.mul[left_index, g], right_index)],
    )
    return CosetDecomposition(left, "double", ambient, partition, right_subgroup=right)


class QuotientGroup(FiniteGroup):
    """Quotient M/N over the left cosets of N in M."""

    def __init__(self, numerator: Subgroup, denominator: Subgroup) -> None:
        if not denominator.issubset(numerator) or not denominator.is_normal_in(
            numerator
        ):
            raise NotNormalSubgroupException(denominator.label, numerator.label)
        parent = numerator.parent
        decomposition = cosets(denominator, "left", ambient=numerator)
        representatives = np.array(decomposition.representatives)
        table = decomposition.membership[
            parent.mul[np.ix_(representatives, representatives)]
        ]
        if denominator.is_trivial:
            labels = [parent.label(r) for r in representatives]
        else:
            labels = [f"[{parent.label(r)}]" for r in representatives]
        if numerator.order == parent.order and denominator.is_trivial:
            name = parent.name
        else:
            name = f"{numerator.label}/{denominator.label}"
        super().__init__(table, labels=labels, name=name, order_cap=parent.order_cap)
        self.numerator = numerator
        self.denominator = denominator
        self.decomposition = decomposition
        self.representatives = tuple(int(r) for r in representatives)

    def project(self, element: int) -> int:
        """Map an element of the numerator to its coset index."""
        index = self.decomposition.coset_of(element)
        if index < 0:
            raise InvalidGroupException(
                f"{self.numerator.parent.label(element)} is not in "
                f"{self.numerator.label}"
            )
        return index

    def lift(self, coset: int) -> int:
        """Return the representative of a coset."""
        return self.representatives[coset]


def quotient_group(numerator: Subgroup, denominator: Subgroup) -> QuotientGroup:
    """Return M/N."""
    return QuotientGroup(numerator, denominator)


class CharacterTable:
    """Irreducible complex characters over conjugacy classes."""

    def __init__(
        self,
        group: FiniteGroup,
        chi: np.ndarray,
        dims: np.ndarray,
    ) -> None:
        self.group = group
        self.classes = group.conjugacy_classes
        self.chi = chi
        self.dims = dims
        self.chi.flags.writeable = False

    def __len__(self) -> int:
        return len(self.dims)

    @property
    def class_sizes(self) -> np.ndarray:
        """Return the class sizes in class order."""
        return np.array([c.size for c in self.classes])

    @cached_property
    def element_values(self) -> np.ndarray:
        """Characters evaluated on every element, indexed [irrep, element]."""
        return self.chi[:, self.group.class_of]

    def value(self, irrep: int, element: int) -> complex:
        """Return χ_irrep(element)."""
        return complex(self.chi[irrep, self.group.class_of[element]])

    def orthogonality_residual(self) -> float:
        """Largest deviation from row and column orthogonality."""
        sizes = self.class_sizes
        order = self.group.order
        rows = (self.chi * sizes) @ self.chi.conj().T / order
        columns = self.chi.T @ self.chi.conj() * sizes[:, None] / order
        identity = np.eye(len(self.dims))
        return float(
            max(np.abs(rows - identity).max(), np.abs(columns - identity).max())
        )


def _snap(values: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    real = np.where(np.abs(values.real) < tol, 0.0, values.real)
    imag = np.where(np.abs(values.imag) < tol, 0.0, values.imag)
    return real + 1j * imag


def class_constants(group: FiniteGroup) -> np.ndarray:
    """Class multiplication constants c[i, j, k] = #{x ∈ C_i : x⁻¹z_k ∈ C_j}."""
    classes = group.conjugacy_classes
    count = len(classes)
    constants = np.zeros((count, count, count))
    for k, conjugacy_class in enumerate(classes):
        partner = group.mul[group.inverse, conjugacy_class.representative]
        np.add.at(constants, (group.class_of, group.class_of[partner], k), 1)
    return constants


@retry_seeded()
def _class_sum_characters(
    group: FiniteGroup, constants: np.ndarray, *, seed: int = DEFAULT_SEED
) -> tuple[np.ndarray, np.ndarray]:
    sizes = np.array([c.size for c in group.conjugacy_classes], dtype=float)
    count = len(sizes)
    rng = np.random.default_rng(seed)
    weights = rng.integers(1, 4 * count + 8, size=count)
    combination = np.tensordot(weights, constants, axes=1)
    eigenvalues, vectors = np.linalg.eig(combination)
    gaps = np.abs(eigenvalues[:, None] - eigenvalues[None, :])
    np.fill_diagonal(gaps, np.inf)
    scale = max(1.0, float(np.abs(eigenvalues).max()))
    if count > 1 and gaps.min() < 1e-6 * scale:
        raise NumericalFailureException(
            f"Near-degenerate class sum spectrum for seed {seed}"
        )
    heads = vectors[0, :]
    if np.abs(heads).min() < 1e-10:
        raise NumericalFailureException("Eigenvector without identity component")
    omega = (vectors / heads).T
    residual = np.einsum("ijk,ak->aij", constants, omega) - (
        omega[:, :, None] * omega[:, None, :]
    )
    if np.abs(residual).max() > 1e-6 * (1.0 + np.abs(omega).max() ** 2):
        raise NumericalFailureException(
            "Class sum eigenvectors are not simultaneous eigenvectors"
        )
    raw_dims = np.sqrt(group.order / np.sum(np.abs(omega) ** 2 / sizes, axis=1))
    dims = np.rint(raw_dims)
    if np.abs(dims - raw_dims).max() >= DEFAULT_ROUNDING_RESIDUAL:
        raise NumericalFailureException(f"Non-integer irrep dimensions {raw_dims}")
    chi = _snap(dims[:, None] * omega / sizes[None, :])
    table = CharacterTable(group, chi, dims.astype(np.int64))
    if int(np.sum(table.dims**2)) != group.order:
        raise NumericalFailureException("Sum of squared dimensions differs from |G|")
    if table.orthogonality_residual() > DEFAULT_TOLERANCE:
        raise NumericalFailureException(
            f"Orthogonality residual {table.orthogonality_residual():.3g}"
        )
    return chi, dims.astype(np.int64)


def _irrep_sort_key(dim: int, row: np.ndarray) -> tuple:
    values = []
    for value in row:
        values.extend((-round(float(value.real), 8), -round(float(value.imag), 8)))
    return (int(dim), tuple(values))


def character_table(group: FiniteGroup, seed: int = DEFAULT_SEED) -> CharacterTable:
    """Compute all irreducible characters by class sum diagonalization.

    Irreps are ordered by dimension, then by character values over classes in
    class order, larger values first; the trivial character is row 0.
    """
    constants = class_constants(group)
    chi, dims = _class_sum_characters(group, constants, seed=seed)
    order = sorted(range(len(dims)), key=lambda a: _irrep_sort_key(dims[a], chi[a]))
    table = CharacterTable(group, chi[order].copy(), dims[order].copy())
    if not np.allclose(table.chi[0], 1.0, atol=DEFAULT_TOLERANCE):
        raise NumericalFailureException("First irrep is not the trivial character")
    _LOGGER.debug(
        "%s: character table with %s classes, dims %s",
        group,
        len(table.classes),
        table.dims.tolist(),
    )
    return table


def cyclic_group(n: int, order_cap: int = DEFAULT_ORDER_CAP) -> FiniteGroup:
    """Return Z_n with labels 0..n-1."""
    if n < 1:
        raise InvalidGroupException(f"Cyclic group order must be positive, got {n}")
    if n > order_cap:
        raise OrderCapExceededException(n, order_cap)
    everything = np.arange(n)
    table = (everything[:, None] + everything[None, :]) % n
    return FiniteGroup(table, [str(i) for i in everything], f"Z{n}", order_cap)


def _power_label(symbol: str, exponent: int) -> str:
    if exponent == 0:
        return ""
    if exponent == 1:
        return symbol
    return symbol + str(exponent).translate(_TO_SUPERSCRIPT)


def dihedral_group(
    n: int,
    rotation: str = "r",
    reflection: str = "s",
    name: Optional[str] = None,
    order_cap: int = DEFAULT_ORDER_CAP,
) -> FiniteGroup:
    """Return the dihedral group of order 2n.

    Element s^m·r^k has index m·n + k and
    (s^m1 r^k1)(s^m2 r^k2) = s^(m1+m2) r^((-1)^m2·k1 + k2).
    """
    if n < 1:
        raise InvalidGroupException(f"Dihedral group needs n >= 1, got {n}")
    if 2 * n > order_cap:
        raise OrderCapExceededException(2 * n, order_cap)
    reflections, rotations = np.divmod(np.arange(2 * n), n)
    m1, m2 = reflections[:, None], reflections[None, :]
    k1, k2 = rotations[:, None], rotations[None, :]
    sign = np.where(m2 == 1, -1, 1)
    table = ((m1 + m2) % 2) * n + (sign * k1 + k2) % n
    labels = [
        (reflection if m else "") + _power_label(rotation, k) or "e"
        for m, k in zip(reflections, rotations)
    ]
    return FiniteGroup(table, labels, name or f"D{n}", order_cap)


def direct_product(
    first: FiniteGroup, second: FiniteGroup, order_cap: int = DEFAULT_ORDER_CAP
) -> FiniteGroup:
    """Return first × second with index i1·|second| + i2."""
    order = first.order * second.order
    if order > order_cap:
        raise OrderCapExceededException(order, order_cap)
    table = (
        first.mul[:, None, :, None] * second.order + second.mul[None, :, None, :]
    ).reshape(order, order)
    labels = [f"({a},{b})" for a in first.labels for b in second.labels]
    return FiniteGroup(table, labels, f"{first.name}x{second.name}", order_cap)


def _cycle_label(permutation: tuple[int, ...]) -> str:
    seen = set()
    cycles = []
    for start in range(len(permutation)):
        if start in seen or permutation[start] == start:
            continue
        cycle = [start]
        seen.add(start)
        point = permutation[start]
        while point != start:
            cycle.append(point)
            seen.add(point)
            point = permutation[point]
        cycles.append("(" + " ".join(str(p) for p in cycle) + ")")
    return "".join(cycles) or "e"


def from_permutations(
    generators: Sequence[Sequence[int]],
    name: Optional[str] = None,
    order_cap: int = DEFAULT_ORDER_CAP,
) -> FiniteGroup:
    """Close permutation generators (image lists) under composition.

    The product a·b applies b first: (a·b)(x) = a(b(x)).
    """
    gens = [tuple(int(x) for x in g) for g in generators]
    if not gens:
        return FiniteGroup([[0]], ["e"], name, order_cap)
    degree = len(gens[0])
    for generator in gens:
        if len(generator) != degree or sorted(generator) != list(range(degree)):
            raise InvalidGroupException(f"{list(generator)} is not a permutation")
    identity = tuple(range(degree))
    elements = [identity]
    index = {identity: 0}
    queue = deque([identity])
    while queue:
        current = queue.popleft()
        for generator in gens:
            image = tuple(current[generator[i]] for i in range(degree))
            if image not in index:
                if len(elements) >= order_cap:
                    raise OrderCapExceededException(len(elements) + 1, order_cap)
                index[image] = len(elements)
                elements.append(image)
                queue.append(image)
    order = len(elements)
    table = np.empty((order, order), dtype=np.int64)
    for i, left in enumerate(elements):
        for j, right in enumerate(elements):
            table[i, j] = index[tuple(left[right[x]] for x in range(degree))]
    return FiniteGroup(table, [_cycle_label(p) for p in elements], name, order_cap)


def preset_group(name: str, order_cap: int = DEFAULT_ORDER_CAP) -> FiniteGroup:
    """Build a named preset: Zn, Dn, S3 or products such as Z2xZ2."""
    factors = [part for part in re.split(r"\s*[x×]\s*", name.strip()) if part]
    if not factors:
        raise InvalidGroupException(f"Empty preset name {name!r}")
    if len(factors) > 1:
        return reduce(
            lambda g, h: direct_product(g, h, order_cap),
            (preset_group(f, order_cap) for f in factors),
        )
    token = factors[0]
    if token == "S3":
        return dihedral_group(3, "τ", "σ", "S3", order_cap)
    if match := re.fullmatch(r"Z(\d+)", token):
        return cyclic_group(int(match.group(1)), order_cap)
    if match := re.fullmatch(r"D(\d+)", token):
        return dihedral_group(int(match.group(1)), order_cap=order_cap)
    raise InvalidGroupException(f"Unknown group preset {name!r}")


def build_group(
    spec: Union[FiniteGroup, str, Path, dict], order_cap: int = DEFAULT_ORDER_CAP
) -> FiniteGroup:
    """Build a validated group from a preset name, a JSON spec file or a dict.

    A spec dict holds exactly one of ``table``, ``permutations`` or
    ``preset``, plus optional ``labels`` and ``name``.
    """
    if isinstance(spec, FiniteGroup):
        return spec
    if isinstance(spec, (str, Path)):
        path = Path(spec)
        if path.suffix == ".json" or path.is_file():
            try:
                spec = json.loads(path.read_text(encoding="utf-8"))
            except (OSError, ValueError) as ex:
                raise SchemaException(f"Unable to read group spec {path}: {ex}") from ex
        else:
            return preset_group(str(spec), order_cap)
    try:
        data = GROUP_SPEC_SCHEMA(spec)
    except vol.Invalid as ex:
        raise SchemaException(f"Invalid group spec: {ex}") from ex
    if "preset" in data:
        return preset_group(data["preset"], order_cap)
    if "table" in data:
        return FiniteGroup(
            data["table"], data.get("labels"), data.get("name"), order_cap
        )
    if "permutations" in data:
        group = from_permutations(data["permutations"], data.get("name"), order_cap)
        if "labels" in data:
            group = FiniteGroup(group.mul, data["labels"], group.name, order_cap)
        return group
    raise SchemaException("Group spec needs one of table, permutations or preset")


def load_group_spec(
    source: Union[str, Path, dict], order_cap: int = DEFAULT_ORDER_CAP
) -> FiniteGroup:
    """Load a JSON group spec file or an already parsed spec dict."""
    if isinstance(source, dict):
        return build_group(source, order_cap)
    path = Path(source)
    if not path.is_file():
        raise SchemaException(f"Group spec file {path} does not exist")
    return build_group(path, order_cap)


def parse_subgroup(group: FiniteGroup, spec: Any) -> Subgroup:
    """Return the subgroup generated by a list or comma-separated element labels.

    ``G`` denotes the whole group; ``{e}`` or ``e`` the trivial subgroup.
    """
    if isinstance(spec, Subgroup):
        return spec
    if isinstance(spec, str):
        text = spec.strip()
        if text in ("G", "*", "all"):
            return group.whole
        tokens = re.findall(r"\([^)]*\)|[^,\s{}]+", text)
    else:
        tokens = list(spec)
    return generate(group, [group.element_index(token) for token in tokens])


def _generating_set(group: FiniteGroup) -> list[int]:
    generators: list[int] = []
    current = group.trivial
    for element in sorted(
        range(group.order), key=lambda g: (-int(group.element_orders[g]), g)
    ):
        if current.order == group.order:
            break
        if element not in current:
            generators.append(element)
            current = generate(group, generators)
    return generators


def _extend_to_isomorphism(
    source: FiniteGroup,
    target: FiniteGroup,
    generators: Sequence[int],
    images: Sequence[int],
) -> Optional[np.ndarray]:
    mapping = np.full(source.order, -1, dtype=np.int64)
    mapping[0] = 0
    queue = deque([0])
    while queue:
        current = queue.popleft()
        for generator, image in zip(generators, images):
            element = source.mul[current, generator]
            value = target.mul[mapping[current], image]
            if mapping[element] < 0:
                mapping[element] = value
                queue.append(element)
            elif mapping[element] != value:
                return None
    if len(set(mapping.tolist())) != source.order:
        return None
    if not np.array_equal(mapping[source.mul], target.mul[np.ix_(mapping, mapping)]):
        return None
    return mapping


def find_isomorphism(source: FiniteGroup, target: FiniteGroup) -> Optional[np.ndarray]:
    """Search generator images exhaustively for an isomorphism source → target."""
    if source.order != target.order or source.is_abelian != target.is_abelian:
        return None
    if not np.array_equal(
        np.sort(source.element_orders), np.sort(target.element_orders)
    ):
        return None
    generators = _generating_set(source)
    candidates = [
        np.flatnonzero(target.element_orders == source.element_orders[g])
        for g in generators
    ]
    for images in itertools.product(*candidates):
        mapping = _extend_to_isomorphism(source, target, generators, images)
        if mapping is not None:
            return mapping
    return None


def is_isomorphic(source: FiniteGroup, target: FiniteGroup) -> bool:
    """Return whether an isomorphism exists."""
    return find_isomorphism(source, target) is not None
