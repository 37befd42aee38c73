"""
Condensable algebras of derived phases D(M/N).

SPDX-License-Identifier: Apache-2.0
"""

from dataclasses import dataclass, field
from functools import cached_property
import logging
from typing import Any, Optional, Union

import numpy as np

from .exceptions import (
    NegativeMultiplicityException,
    NonIntegerMultiplicityException,
    NotNormalSubgroupException,
)
from .group import (
    FiniteGroup,
    QuotientGroup,
    Subgroup,
    normal_subgroups_in,
    parse_subgroup,
)
from .helpers import diagnostic
from .qdouble import (
    DoubleClassFunction,
    QuantumDouble,
    format_combination,
    quantum_double,
)

_LOGGER = logging.getLogger(__name__)

SubgroupLike = Union[Subgroup, str, list, tuple]


class PhaseSpec:
    """Derived phase given by a subgroup M and a subgroup N normal in M."""

    def __init__(
        self,
        group: FiniteGroup,
        numerator: SubgroupLike,
        denominator: SubgroupLike,
        name: Optional[str] = None,
    ) -> None:
        M = parse_subgroup(group, numerator)
        N = parse_subgroup(group, denominator)
        if not N.issubset(M) or not N.is_normal_in(M):
            raise NotNormalSubgroupException(N.label, M.label)
        self.group = group
        self.M = M
        self.N = N
        self.name = name
        self.n_normal_in_group = N.is_normal
        if not self.n_normal_in_group:
            _LOGGER.debug("%s is normal in %s but not in the parent", N.label, M.label)

    def __repr__(self) -> str:
        return f"PhaseSpec({self.key})"

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, PhaseSpec)
            and other.group is self.group
            and other.M == self.M
            and other.N == self.N
        )

    def __hash__(self) -> int:
        return hash((id(self.group), self.M.elements, self.N.elements))

    @property
    def key(self) -> str:
        """Return the phase as "M/N" with subgroup labels."""
        return f"{self.M.label}/{self.N.label}"

    @property
    def label(self) -> str:
        """Return the display name, falling back to the key."""
        return self.name or self.key

    @property
    def sort_key(self) -> tuple:
        """Larger M first, then larger N."""
        return (-self.M.order, self.M.elements, -self.N.order, self.N.elements)

    @property
    def is_parent(self) -> bool:
        """Return whether this is the undisturbed D(G) phase."""
        return self.M.order == self.group.order and self.N.is_trivial

    @property
    def quotient_order(self) -> int:
        """Return |M/N|."""
        return self.M.order // self.N.order

    @cached_property
    def quotient(self) -> QuotientGroup:
        """Return M/N."""
        return QuotientGroup(self.M, self.N)

    def with_name(self, name: str) -> "PhaseSpec":
        """Return a copy carrying a display name."""
        return PhaseSpec(self.group, self.M, self.N, name)


def parent_phase(group: FiniteGroup) -> PhaseSpec:
    """Return the phase (G, {e})."""
    return PhaseSpec(group, group.whole, group.trivial)


def enumerate_phases(group: FiniteGroup) -> list[PhaseSpec]:
    """Return every (M, N ⊴ M); phases with equal algebras stay distinct."""
    phases = [
        PhaseSpec(group, M, N)
        for M in group.subgroups
        for N in normal_subgroups_in(M)
    ]
    return sorted(phases, key=lambda p: p.sort_key)


def condensable_character(spec: PhaseSpec) -> DoubleClassFunction:
    """Character of A_{M,N} on every pair (h, g).

    (1/|M|)·[gh = hg]·Σ_x [x⁻¹gx ∈ N]·[x⁻¹hx ∈ M]; for abelian groups this is
    (|G|/|M|)·[g ∈ N]·[h ∈ M].
    """
    group = spec.group
    if group.is_abelian:
        values = (group.order / spec.M.order) * np.outer(spec.M.mask, spec.N.mask)
        return DoubleClassFunction(group, values)
    inverse_conjugation = group.conjugation[group.inverse]
    in_m = spec.M.mask[inverse_conjugation].astype(float)
    in_n = spec.N.mask[inverse_conjugation].astype(float)
    values = (in_m.T @ in_n) * group.commutes / spec.M.order
    return DoubleClassFunction(group, values)


def chi_condensable(spec: PhaseSpec, h: int, g: int) -> complex:
    """Evaluate the condensable algebra character at h·g* by the general sum."""
    group = spec.group
    if not group.commutes[h, g]:
        return 0j
    inverse_conjugation = group.conjugation[group.inverse]
    count = np.sum(
        spec.N.mask[inverse_conjugation[:, g]] & spec.M.mask[inverse_conjugation[:, h]]
    )
    return complex(count / spec.M.order)


@dataclass
class CondensableAlgebra:
    """Decomposition of A_{M,N} into parent anyons."""

    phase: PhaseSpec
    double: QuantumDouble = field(repr=False)
    multiplicities: Optional[np.ndarray] = None
    diagnostic: Optional[dict[str, Any]] = None

    @property
    def ok(self) -> bool:
        """Return whether the decomposition succeeded."""
        return self.multiplicities is not None

    @property
    def dim(self) -> int:
        """Return Σ m_a·d_a."""
        if self.multiplicities is None:
            return 0
        return int(self.multiplicities @ self.double.quantum_dims)

    @property
    def names(self) -> list[str]:
        """Return the condensed anyon names with multiplicity."""
        if self.multiplicities is None:
            return []
        return [
            name
            for name, count in zip(self.double.names, self.multiplicities)
            for _ in range(int(count))
        ]

    def __str__(self) -> str:
        return format_algebra(self)

    def as_dict(self) -> dict[str, Any]:
        """Return a JSON serializable view."""
        return {
            "M": self.phase.M.label,
            "N": self.phase.N.label,
            "n_normal_in_G": self.phase.n_normal_in_group,
            "algebra": format_algebra(self),
            "multiplicities": (
                None if self.multiplicities is None else self.multiplicities.tolist()
            ),
            "dim": self.dim,
            "lagrangian": is_lagrangian(self),
            "diagnostic": self.diagnostic,
        }


def condensable_algebra(spec: PhaseSpec) -> CondensableAlgebra:
    """Decompose the condensable algebra character over the anyons of D(G).

    When N is not normal in G a failed decomposition is returned as a
    diagnostic instead of raising.
    """
    double = quantum_double(spec.group)
    function = condensable_character(spec)
    try:
        multiplicities = double.decompose(function)
    except (NonIntegerMultiplicityException, NegativeMultiplicityException) as ex:
        if spec.n_normal_in_group:
            raise
        _LOGGER.warning(
            "%s: decomposition failed with N not normal in G: %s", spec.key, ex
        )
        return CondensableAlgebra(spec, double, diagnostic=diagnostic(ex))
    _LOGGER.debug(
        "%s: condensable algebra %s",
        spec.key,
        format_combination(multiplicities, double.names),
    )
    return CondensableAlgebra(spec, double, multiplicities)


def is_lagrangian(algebra: CondensableAlgebra) -> bool:
    """Return whether dim A equals |G|, the total quantum dimension of D(G)."""
    return algebra.ok and algebra.dim == algebra.phase.group.order


def derived_dimension_check(algebra: CondensableAlgebra) -> bool:
    """Check dim A_{M,N} = |G|/|M/N|."""
    phase = algebra.phase
    return algebra.ok and algebra.dim * phase.quotient_order == phase.group.order


def format_algebra(algebra: CondensableAlgebra) -> str:
    """Render the algebra in anyon notation, e.g. "1+mm~" or "A+C"."""
    if algebra.multiplicities is None:
        return "?"
    return format_combination(algebra.multiplicities, algebra.double.names)
