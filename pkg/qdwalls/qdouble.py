"""
Anyons of the quantum double D(G).

SPDX-License-Identifier: Apache-2.0

An anyon is a pair (conjugacy class C, irrep R of the centralizer of the class
representative). Characters are evaluated on the basis h·g* and stored as one
dense array indexed [anyon, h, g], from which decomposition, the modular S and
T data and Verlinde fusion rules follow.
"""

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
import logging
from typing import Iterator, NamedTuple, Optional, Sequence, Union

import numpy as np

from .const import CONFINED_NAME, DEFAULT_TOLERANCE, VACUUM_NAME
from .exceptions import (
    InvalidClassFunctionException,
    NumericalFailureException,
    ShapeMismatchException,
)
from .group import FiniteGroup, Subgroup
from .helpers import round_to_int

_LOGGER = logging.getLogger(__name__)

# Display letters for D(S3) indexed by anyon position; the two charged
# τ-flux anyons follow the ω ordering of the Z3 centralizer.
S3_NAMES = ["A", "B", "C", "D", "E", "F", "H", "G"]


@dataclass(frozen=True)
class Anyon:
    """Simple object of D(G)."""

    index: int
    class_index: int
    representative: int
    irrep: int
    irrep_dim: int
    quantum_dim: int
    name: str
    group: FiniteGroup = field(compare=False, repr=False)
    centralizer: Subgroup = field(compare=False, repr=False)

    def __str__(self) -> str:
        return self.name

    @property
    def is_vacuum(self) -> bool:
        """Return whether this is the trivial anyon."""
        return self.index == 0


class KMap:
    """Elements k_b with b = k_b·r·k_b⁻¹ for every b in the class of r."""

    def __init__(self, group: FiniteGroup, seed: Optional[int] = None) -> None:
        rng = np.random.default_rng(seed) if seed is not None else None
        k = np.zeros(group.order, dtype=np.int64)
        representative = np.zeros(group.order, dtype=np.int64)
        for conjugacy_class in group.conjugacy_classes:
            rep = conjugacy_class.representative
            representative[list(conjugacy_class.elements)] = rep
            for element in conjugacy_class.elements:
                if element == rep:
                    continue
                candidates = np.flatnonzero(group.conjugation[:, rep] == element)
                k[element] = candidates[0] if rng is None else rng.choice(candidates)
        self.group = group
        self.seed = seed
        self.k = k
        self.representative = representative

    def __getitem__(self, element: int) -> int:
        return int(self.k[element])

    def is_consistent(self) -> bool:
        """Check b = k_b·r·k_b⁻¹ for all b and k_r = e for representatives."""
        images = self.group.conjugation[self.k, self.representative]
        return bool(
            np.array_equal(images, np.arange(self.group.order))
            and np.all(self.k[self.representative] == 0)
        )


class DoubleClassFunction:
    """Function on pairs (h, g) of group elements, values indexed [h, g]."""

    def __init__(self, group: FiniteGroup, values) -> None:
        array = np.asarray(values, dtype=complex)
        if array.shape != (group.order, group.order):
            raise ShapeMismatchException(
                f"Expected values of shape {(group.order, group.order)}, "
                f"got {array.shape}"
            )
        self.group = group
        self.values = array

    def __call__(self, h: int, g: int) -> complex:
        return complex(self.values[h, g])

    def _check_group(self, other: "DoubleClassFunction") -> None:
        if other.group is not self.group:
            raise ShapeMismatchException("Class functions over different groups")

    def __add__(self, other: "DoubleClassFunction") -> "DoubleClassFunction":
        self._check_group(other)
        return DoubleClassFunction(self.group, self.values + other.values)

    def __sub__(self, other: "DoubleClassFunction") -> "DoubleClassFunction":
        self._check_group(other)
        return DoubleClassFunction(self.group, self.values - other.values)

    def __mul__(
        self, other: Union["DoubleClassFunction", complex]
    ) -> "DoubleClassFunction":
        if isinstance(other, DoubleClassFunction):
            self._check_group(other)
            return DoubleClassFunction(self.group, self.values * other.values)
        return DoubleClassFunction(self.group, self.values * other)

    __rmul__ = __mul__

    def conj(self) -> "DoubleClassFunction":
        """Return the pointwise complex conjugate."""
        return DoubleClassFunction(self.group, self.values.conj())

    def inner(self, other: "DoubleClassFunction") -> complex:
        """Unnormalized inner product Σ conj(self)·other over all pairs."""
        self._check_group(other)
        return complex(np.vdot(self.values, other.values))

    def is_class_function(self, tolerance: float = DEFAULT_TOLERANCE) -> bool:
        """Check invariance under simultaneous conjugation of h and g."""
        conj = self.group.conjugation
        moved = self.values[conj[:, :, None], conj[:, None, :]]
        return bool(np.abs(moved - self.values[None, :, :]).max() <= tolerance)


class ModularData(NamedTuple):
    """Modular S matrix and the diagonal of T."""

    s: np.ndarray
    t: np.ndarray

    @property
    def t_matrix(self) -> np.ndarray:
        """Return T as a diagonal matrix."""
        return np.diag(self.t)


def _charge_sign(value: complex) -> int:
    return 1 if value.real < 0 else 0


def _anyon_names(
    group: FiniteGroup, records: list[tuple[int, int, Subgroup, np.ndarray, int]]
) -> list[str]:
    """Conventional names; records hold (class, rep, centralizer, chi row, dim)."""
    order = group.order
    if order == 1:
        return [VACUUM_NAME]
    if order == 2:
        return [VACUUM_NAME, "e", "m", "f"]
    if order == 3:
        flux = ["", "m", "m~"]
        charge = ["", "e", "e~"]
        return [
            flux[rep] + charge[irrep] or VACUUM_NAME
            for (_, rep, _, _, _), irrep in zip(records, _irrep_positions(records))
        ]
    if order == 4 and group.element_orders.max() == 2:
        layers = [["", "e", "m", "f"], ["", "e~", "m~", "f~"]]
        names = []
        for _, rep, _, chi, _ in records:
            first = 2 * (rep >> 1) + _charge_sign(chi[2])
            second = 2 * (rep & 1) + _charge_sign(chi[1])
            names.append(layers[0][first] + layers[1][second] or VACUUM_NAME)
        return names
    if group.name == "S3" and len(records) == len(S3_NAMES):
        return list(S3_NAMES)
    if group.name == "D4" and order == 8:
        return [_d4_name(group, record) for record in records]
    return [
        f"({group.label(rep)},{irrep})"
        for (_, rep, _, _, _), irrep in zip(records, _irrep_positions(records))
    ]


def _irrep_positions(records) -> list[int]:
    positions = []
    previous = None
    counter = 0
    for class_index, *_ in records:
        counter = counter + 1 if class_index == previous else 0
        previous = class_index
        positions.append(counter)
    return positions


def _d4_name(group: FiniteGroup, record) -> str:
    class_index, rep, centralizer, chi, dim = record
    local = centralizer.local_index

    def value(label: str) -> complex:
        return chi[local[group.element_index(label)]]

    label = group.label(rep)
    if label in ("e", "r²"):
        letter = "A" if label == "e" else "B"
        if dim == 2:
            return f"{letter}4"
        signs = (_charge_sign(value("s")), _charge_sign(value("r")))
        return letter + str({(0, 0): 0, (1, 0): 1, (0, 1): 2, (1, 1): 3}[signs])
    if label == "r":
        k = int(np.rint(np.angle(value("r")) / (np.pi / 2))) % 4
        return f"C{k}"
    if label == "s":
        return f"D{_charge_sign(value('r²'))}{_charge_sign(value('s'))}"
    return f"E{_charge_sign(value('r²'))}{_charge_sign(value('sr'))}"


class QuantumDouble:
    """Anyons and characters of D(G)."""

    def __init__(self, group: FiniteGroup, kmap_seed: Optional[int] = None) -> None:
        self.group = group
        self.kmap = KMap(group, kmap_seed)
        order = group.order
        records = []
        blocks = []
        for class_index, conjugacy_class in enumerate(group.conjugacy_classes):
            rep = conjugacy_class.representative
            centralizer = group.centralizer(rep)
            table = centralizer.as_group().character_table
            values = table.element_values
            block = np.zeros((len(table), order, order), dtype=complex)
            for element in conjugacy_class.elements:
                hs = np.flatnonzero(group.commutes[:, element])
                k_inverse = group.inverse[self.kmap[element]]
                moved = group.conjugation[k_inverse, hs]
                block[:, hs, element] = values[:, centralizer.local_index[moved]]
            blocks.append(block)
            for irrep, dim in enumerate(table.dims):
                records.append(
                    (
                        class_index,
                        rep,
                        centralizer,
                        values[irrep],
                        int(dim),
                    )
                )
        names = _anyon_names(group, records)
        self.anyons = [
            Anyon(
                index=index,
                class_index=class_index,
                representative=rep,
                irrep=irrep,
                irrep_dim=dim,
                quantum_dim=len(group.conjugacy_classes[class_index].elements) * dim,
                name=name,
                group=group,
                centralizer=centralizer,
            )
            for index, ((class_index, rep, centralizer, _, dim), irrep, name) in (
                enumerate(zip(records, _irrep_positions(records), names))
            )
        ]
        self.characters = np.concatenate(blocks, axis=0)
        self.characters.flags.writeable = False
        self._by_name = {a.name: a for a in self.anyons}
        _LOGGER.debug(
            "%s: %s anyons, names %s", group, len(self.anyons), self.names
        )

    def __len__(self) -> int:
        return len(self.anyons)

    def __iter__(self) -> Iterator[Anyon]:
        return iter(self.anyons)

    def __getitem__(self, index: int) -> Anyon:
        return self.anyons[index]

    @property
    def names(self) -> list[str]:
        """Return the anyon display names in order."""
        return [a.name for a in self.anyons]

    @property
    def quantum_dims(self) -> np.ndarray:
        """Return d_a for every anyon."""
        return np.array([a.quantum_dim for a in self.anyons], dtype=np.int64)

    @property
    def total_dimension(self) -> float:
        """Return sqrt(Σ d_a²), equal to |G|."""
        return float(np.sqrt(np.sum(self.quantum_dims.astype(float) ** 2)))

    def anyon_by_name(self, name: str) -> Anyon:
        """Look up an anyon by display name."""
        try:
            return self._by_name[name]
        except KeyError as ex:
            raise KeyError(f"No anyon named {name!r} in D({self.group.name})") from ex

    def chi(self, anyon: Union[Anyon, int], h: int, g: int) -> complex:
        """Return χ_a(h·g*)."""
        index = anyon.index if isinstance(anyon, Anyon) else int(anyon)
        return complex(self.characters[index, h, g])

    def character(self, anyon: Union[Anyon, int]) -> DoubleClassFunction:
        """Return the character of an anyon as a class function."""
        index = anyon.index if isinstance(anyon, Anyon) else int(anyon)
        return DoubleClassFunction(self.group, self.characters[index])

    def combination(self, coefficients: Sequence[complex]) -> DoubleClassFunction:
        """Return Σ c_a·χ_a."""
        return DoubleClassFunction(
            self.group, np.tensordot(np.asarray(coefficients), self.characters, axes=1)
        )

    def decompose(
        self,
        function: DoubleClassFunction,
        allow_negative: bool = False,
        tolerance: float = DEFAULT_TOLERANCE,
    ) -> np.ndarray:
        """Multiplicities m_a = ⟨χ_a|f⟩/⟨χ_a|χ_a⟩ rounded to integers."""
        if function.group is not self.group:
            raise ShapeMismatchException("Class function over a different group")
        scale = max(1.0, float(np.abs(function.values).max()))
        if not function.is_class_function(tolerance * scale):
            raise InvalidClassFunctionException(
                "Function is not invariant under simultaneous conjugation"
            )
        overlaps = np.einsum("ahg,hg->a", self.characters.conj(), function.values)
        return round_to_int(
            overlaps / self.norms, labels=self.names, allow_negative=allow_negative
        )

    @cached_property
    def norms(self) -> np.ndarray:
        """Unnormalized ⟨χ_a|χ_a⟩, equal to |G| for every anyon."""
        return np.einsum("ahg,ahg->a", self.characters.conj(), self.characters).real

    @cached_property
    def modular_data(self) -> ModularData:
        """Modular S and T; S_{1a} = d_a/|G|."""
        order = self.group.order
        chars = self.characters
        s = np.einsum("ahg,bgh->ab", chars, chars).conj() / order
        t = np.array(
            [
                chars[a.index, a.representative, a.representative] / a.irrep_dim
                for a in self.anyons
            ]
        )
        residual = max(
            np.abs(s @ s.conj().T - np.eye(len(s))).max(), np.abs(s - s.T).max()
        )
        if residual > DEFAULT_TOLERANCE:
            raise NumericalFailureException(
                f"S matrix of D({self.group.name}) not symmetric unitary, "
                f"residual {residual:.3g}"
            )
        if np.abs(np.abs(t) - 1).max() > DEFAULT_TOLERANCE:
            raise NumericalFailureException("T entries are not phases")
        return ModularData(s, t)

    @cached_property
    def fusion(self) -> np.ndarray:
        """Verlinde fusion tensor N[a, b, c]."""
        s = self.modular_data.s
        raw = np.einsum("ax,bx,cx->abc", s, s, s.conj() / s[0][None, :])
        return round_to_int(raw)

    @cached_property
    def duals(self) -> np.ndarray:
        """Index of the dual anyon, whose character is χ(h⁻¹, g⁻¹)."""
        inverse = self.group.inverse
        flipped = self.characters[:, inverse][:, :, inverse]
        flat = self.characters.reshape(len(self), -1)
        result = np.empty(len(self), dtype=np.int64)
        for index, row in enumerate(flipped.reshape(len(self), -1)):
            distance = np.abs(flat - row).max(axis=1)
            match = int(np.argmin(distance))
            if distance[match] > DEFAULT_TOLERANCE:
                raise NumericalFailureException(
                    f"No dual found for anyon {self.names[index]}"
                )
            result[index] = match
        return result


@lru_cache(maxsize=64)
def quantum_double(
    group: FiniteGroup, kmap_seed: Optional[int] = None
) -> QuantumDouble:
    """Return the (memoized) quantum double of a group."""
    return QuantumDouble(group, kmap_seed)


def anyons(group: FiniteGroup) -> list[Anyon]:
    """Return the anyons of D(G), vacuum first."""
    return quantum_double(group).anyons


def chi_anyon(anyon: Anyon, h: int, g: int) -> complex:
    """Evaluate the anyon character at h·g*.

    Zero unless g lies in the class of the anyon and commutes with h; then the
    centralizer character at k_g⁻¹·h·k_g.
    """
    return quantum_double(anyon.group).chi(anyon, h, g)


def decompose(
    function: DoubleClassFunction, basis: Optional[Sequence[Anyon]] = None
) -> np.ndarray:
    """Decompose a class function of D(G) into anyon multiplicities."""
    multiplicities = quantum_double(function.group).decompose(function)
    if basis is None:
        return multiplicities
    return multiplicities[[a.index for a in basis]]


def modular_data(anyon_list: Sequence[Anyon]) -> ModularData:
    """Return S and T for a complete anyon list."""
    return quantum_double(anyon_list[0].group).modular_data


def fusion_rules(anyon_list: Sequence[Anyon]) -> np.ndarray:
    """Return N_ab^c for a complete anyon list."""
    return quantum_double(anyon_list[0].group).fusion


def dual(anyon: Anyon) -> Anyon:
    """Return the dual anyon."""
    double = quantum_double(anyon.group)
    return double.anyons[int(double.duals[anyon.index])]


def format_combination(multiplicities: Sequence[int], names: Sequence[str]) -> str:
    """Render Σ m_a·a as "1+2m"; an empty combination renders as "0"."""
    terms = [
        (name if count == 1 else f"{count}{name}")
        for count, name in zip(multiplicities, names)
        if count
    ]
    return "+".join(terms) or CONFINED_NAME
