"""
Gate calculus on modular tensor category data.

SPDX-License-Identifier: Apache-2.0

MTC data (fusion rules, F- and R-symbols, S and T) is read from a JSON file or
built for the double of a small abelian group. Domain walls between two
theories are given by M-symbols. On top of that data this module evaluates
wrapping eigenvalues, double braids of ribbon-attached punctures, ribbon-path
coefficients and the logical transition matrix U of a three-anyon fusion tree.
"""

import json
import logging
from pathlib import Path
from typing import Any, NamedTuple, Optional, Sequence, Union

import numpy as np
from packaging import version
import voluptuous as vol

from .const import (
    DEFAULT_ABELIAN_MTC_CAP,
    DEFAULT_SEED,
    DEFAULT_SPOT_CHECKS,
    DEFAULT_TOLERANCE,
    MIN_SCHEMA_VERSION,
    SCHEMA_VERSION,
)
from .exceptions import (
    InvalidFusionChannelException,
    MTCConsistencyException,
    NonAbelianGroupException,
    OrderCapExceededException,
    SchemaException,
    ShapeMismatchException,
)
from .group import FiniteGroup
from .helpers import complex_to_json
from .qdouble import quantum_double
from .tunneling import TunnelingMap, em_duality

_LOGGER = logging.getLogger(__name__)

S_NORMALIZATIONS = ["unitary", "unnormalized"]

COMPLEX_VALUE = vol.Any(
    vol.Coerce(float),
    vol.All([vol.Coerce(float)], vol.Length(min=2, max=2)),
)

MTC_SCHEMA = vol.Schema(
    {
        vol.Required("schema_version"): str,
        vol.Optional("name", default="mtc"): str,
        vol.Required("labels"): vol.All([str], vol.Length(min=1)),
        vol.Required("duals"): [str],
        vol.Required("dims"): [vol.Coerce(float)],
        vol.Required("fusion"): list,
        vol.Optional("s_normalization", default="unitary"): vol.In(S_NORMALIZATIONS),
        vol.Required("S"): list,
        vol.Required("T"): [COMPLEX_VALUE],
        vol.Required("F"): [
            {
                vol.Required("a"): str,
                vol.Required("b"): str,
                vol.Required("c"): str,
                vol.Required("d"): str,
                vol.Required("e"): str,
                vol.Required("f"): str,
                vol.Required("value"): COMPLEX_VALUE,
            }
        ],
        vol.Required("R"): [
            {
                vol.Required("a"): str,
                vol.Required("b"): str,
                vol.Required("c"): str,
                vol.Required("value"): COMPLEX_VALUE,
            }
        ],
    }
)

WALL_SYMBOL = vol.Schema(
    {
        vol.Required("key"): vol.All([str], vol.Length(min=6, max=6)),
        vol.Required("value"): list,
    }
)

WALL_SCHEMA = vol.Schema(
    {
        vol.Required("schema_version"): str,
        vol.Optional("source"): str,
        vol.Optional("target"): str,
        vol.Required("leaf_symbols"): [WALL_SYMBOL],
        vol.Required("root_symbols"): [WALL_SYMBOL],
    }
)

Label = Union[int, str]
SymbolKey = tuple[str, str, str, str, str, str]


def _to_complex(value: Any) -> complex:
    if isinstance(value, (list, tuple)):
        return complex(value[0], value[1])
    return complex(value)


def _complex_array(values: Any, rank: int) -> np.ndarray:
    """Decode a rank-n array of numbers or of [re, im] pairs."""
    array = np.asarray(values, dtype=float)
    if array.ndim == rank + 1 and array.shape[-1] == 2:
        return array[..., 0] + 1j * array[..., 1]
    return array.astype(complex)


def _array_to_json(array: np.ndarray) -> list:
    array = np.asarray(array, dtype=complex)
    return np.stack([array.real, array.imag], axis=-1).tolist()


def _check_version(text: str) -> None:
    if version.parse(text) < version.parse(MIN_SCHEMA_VERSION):
        raise SchemaException(
            f"Schema version {text} is older than {MIN_SCHEMA_VERSION}"
        )


def _read(source: Union[str, Path, dict], schema: vol.Schema) -> dict:
    if isinstance(source, dict):
        raw = source
    else:
        try:
            raw = json.loads(Path(source).read_text(encoding="utf-8"))
        except (OSError, ValueError) as ex:
            raise SchemaException(f"Unable to read {source}: {ex}") from ex
    try:
        data = schema(raw)
    except vol.Invalid as ex:
        raise SchemaException(f"Invalid data: {ex}") from ex
    _check_version(data["schema_version"])
    return data


class FBlock(NamedTuple):
    """F^{abc}_d with rows e ∈ a⊗b and columns f ∈ b⊗c."""

    rows: tuple[int, ...]
    cols: tuple[int, ...]
    matrix: np.ndarray

    def entry(self, e: int, f: int) -> complex:
        """Return [F]_{ef}, zero outside the block."""
        if e not in self.rows or f not in self.cols:
            return 0j
        return complex(self.matrix[self.rows.index(e), self.cols.index(f)])


class MTCData:
    """Multiplicity-free modular tensor category data.

    S is stored unitary (S_00 = 1/D) whatever the file declares.
    """

    def __init__(
        self,
        labels: Sequence[str],
        duals: Sequence[int],
        dims: Sequence[float],
        fusion: np.ndarray,
        s: np.ndarray,
        t: np.ndarray,
        f_entries: dict[tuple[int, ...], complex],
        r_entries: dict[tuple[int, int, int], complex],
        name: str = "mtc",
    ) -> None:
        self.labels = list(labels)
        self.name = name
        self.duals = np.asarray(duals, dtype=np.int64)
        self.dims = np.asarray(dims, dtype=float)
        self.fusion = np.asarray(fusion, dtype=np.int64)
        self.s = np.asarray(s, dtype=complex)
        self.t = np.asarray(t, dtype=complex)
        self.r_entries = dict(r_entries)
        self.f_entries = dict(f_entries)
        self._index = {label: i for i, label in enumerate(self.labels)}
        self.f_blocks = self._assemble_blocks()
        count = len(self.labels)
        if self.fusion.shape != (count,) * 3:
            raise MTCConsistencyException(
                "shapes", f"fusion tensor {self.fusion.shape} for {count} labels"
            )
        if self.s.shape != (count, count) or self.t.shape != (count,):
            raise MTCConsistencyException(
                "shapes", f"S {self.s.shape} and T {self.t.shape} for {count} labels"
            )

    def __len__(self) -> int:
        return len(self.labels)

    def __repr__(self) -> str:
        return f"MTCData({self.name}, {len(self)} labels)"

    def index(self, label: Label) -> int:
        """Return the index of a label name or pass an index through."""
        if isinstance(label, (int, np.integer)):
            return int(label)
        try:
            return self._index[label]
        except KeyError as ex:
            raise SchemaException(f"{self.name} has no label {label!r}") from ex

    @property
    def total_dimension(self) -> float:
        """Return D = sqrt(Σ d_a²)."""
        return float(np.sqrt(np.sum(self.dims**2)))

    def channels(self, a: Label, b: Label) -> list[int]:
        """Return the labels c with N_ab^c > 0."""
        row = self.fusion[self.index(a), self.index(b)]
        return [int(c) for c in np.flatnonzero(row)]

    def _block_axes(self, a: int, b: int, c: int, d: int):
        rows = tuple(e for e in self.channels(a, b) if self.fusion[e, c, d])
        cols = tuple(f for f in self.channels(b, c) if self.fusion[a, f, d])
        return rows, cols

    def _assemble_blocks(self) -> dict[tuple[int, int, int, int], FBlock]:
        blocks: dict[tuple[int, int, int, int], FBlock] = {}
        for (a, b, c, d, e, f), value in self.f_entries.items():
            key = (a, b, c, d)
            if key not in blocks:
                rows, cols = self._block_axes(a, b, c, d)
                blocks[key] = FBlock(
                    rows, cols, np.zeros((len(rows), len(cols)), dtype=complex)
                )
            block = blocks[key]
            if e not in block.rows or f not in block.cols:
                raise MTCConsistencyException(
                    "F-support",
                    f"F^{{{self._names(a, b, c)}}}_{self.labels[d]} entry "
                    f"({self.labels[e]}, {self.labels[f]}) violates the fusion rules",
                )
            block.matrix[block.rows.index(e), block.cols.index(f)] = value
        return blocks

    def _names(self, *indices: int) -> str:
        return ",".join(self.labels[i] for i in indices)

    def F(self, a: Label, b: Label, c: Label, d: Label, e: Label, f: Label) -> complex:
        """Return [F^{abc}_d]_{ef}, zero when absent."""
        key = (self.index(a), self.index(b), self.index(c), self.index(d))
        block = self.f_blocks.get(key)
        if block is None:
            return 0j
        return block.entry(self.index(e), self.index(f))

    def F_block(self, a: Label, b: Label, c: Label, d: Label) -> FBlock:
        """Return the full block F^{abc}_d."""
        key = (self.index(a), self.index(b), self.index(c), self.index(d))
        if key in self.f_blocks:
            return self.f_blocks[key]
        rows, cols = self._block_axes(*key)
        return FBlock(rows, cols, np.zeros((len(rows), len(cols)), dtype=complex))

    def R(self, a: Label, b: Label, c: Label) -> complex:
        """Return R^{ab}_c, zero when absent."""
        return self.r_entries.get((self.index(a), self.index(b), self.index(c)), 0j)


def validate_mtc(data: MTCData, tolerance: float = DEFAULT_TOLERANCE) -> MTCData:
    """Check the named identities; raise on the first violation."""
    count = len(data)
    fusion = data.fusion
    identity = np.eye(count, dtype=np.int64)
    if fusion.max() > 1:
        raise MTCConsistencyException(
            "multiplicity-free", "fusion multiplicities above 1 are not supported"
        )
    if not (
        np.array_equal(fusion[0], identity) and np.array_equal(fusion[:, 0], identity)
    ):
        raise MTCConsistencyException("vacuum-fusion", "N_{1a}^b must equal δ_ab")
    for a in range(count):
        if fusion[a, data.duals[a], 0] != 1:
            raise MTCConsistencyException(
                "dual", f"{data.labels[a]} does not fuse with its dual to the vacuum"
            )
    if np.any(data.dims < 1 - tolerance):
        raise MTCConsistencyException("dims", "quantum dimensions must be at least 1")
    products = np.einsum("abc,c->ab", fusion, data.dims)
    if np.abs(products - np.outer(data.dims, data.dims)).max() > tolerance:
        raise MTCConsistencyException("dims", "d_a·d_b differs from Σ_c N_ab^c d_c")
    for a in range(count):
        bubble = abs(data.F(a, data.duals[a], a, a, 0, 0))
        if abs(bubble - 1 / data.dims[a]) > tolerance:
            raise MTCConsistencyException(
                "bubble",
                f"|F^{{a ā a}}_a| for a = {data.labels[a]} is {bubble:.6g}, "
                f"expected {1 / data.dims[a]:.6g}",
            )
    for key, block in data.f_blocks.items():
        matrix = block.matrix
        if matrix.shape[0] != matrix.shape[1] or (
            np.abs(matrix.conj().T @ matrix - np.eye(len(matrix))).max() > tolerance
        ):
            raise MTCConsistencyException(
                "F-unitarity",
                f"block F^{{{data._names(*key[:3])}}}_{data.labels[key[3]]}",
            )
    row = data.s[0] / data.s[0, 0]
    if np.abs(row - data.dims).max() > tolerance:
        raise MTCConsistencyException("S-vacuum-row", "S_0a/S_00 must equal d_a")
    if np.abs(data.s @ data.s.conj().T - np.eye(count)).max() > tolerance:
        raise MTCConsistencyException("S-unitarity", "S is not unitary")
    _LOGGER.debug("%s: passed consistency checks", data.name)
    return data


def load_mtc(
    source: Union[str, Path, dict], tolerance: float = DEFAULT_TOLERANCE
) -> MTCData:
    """Load and validate MTC data from a JSON file or parsed dict."""
    raw = _read(source, MTC_SCHEMA)
    labels = raw["labels"]
    if len(set(labels)) != len(labels):
        raise SchemaException("Labels must be unique")
    index = {label: i for i, label in enumerate(labels)}

    def lookup(label: str) -> int:
        try:
            return index[label]
        except KeyError as ex:
            raise SchemaException(f"Unknown label {label!r}") from ex

    s = _complex_array(raw["S"], 2)
    dims = np.asarray(raw["dims"], dtype=float)
    if raw["s_normalization"] == "unnormalized":
        s = s / np.sqrt(np.sum(dims**2))
    data = MTCData(
        labels,
        [lookup(label) for label in raw["duals"]],
        dims,
        np.asarray(raw["fusion"], dtype=np.int64),
        s,
        np.array([_to_complex(value) for value in raw["T"]]),
        {
            tuple(lookup(entry[k]) for k in "abcdef"): _to_complex(entry["value"])
            for entry in raw["F"]
        },
        {
            tuple(lookup(entry[k]) for k in "abc"): _to_complex(entry["value"])
            for entry in raw["R"]
        },
        raw["name"],
    )
    return validate_mtc(data, tolerance)


def dump_mtc(data: MTCData) -> dict[str, Any]:
    """Serialize to the JSON layout read by load_mtc."""
    names = data.labels
    return {
        "schema_version": SCHEMA_VERSION,
        "name": data.name,
        "labels": names,
        "duals": [names[d] for d in data.duals],
        "dims": data.dims.tolist(),
        "fusion": data.fusion.tolist(),
        "s_normalization": "unitary",
        "S": _array_to_json(data.s),
        "T": [complex_to_json(value) for value in data.t],
        "F": [
            {
                **dict(zip("abcdef", (names[i] for i in key))),
                "value": complex_to_json(value),
            }
            for key, value in sorted(data.f_entries.items())
        ],
        "R": [
            {
                **dict(zip("abc", (names[i] for i in key))),
                "value": complex_to_json(value),
            }
            for key, value in sorted(data.r_entries.items())
        ],
    }


def builtin_abelian_double(group: FiniteGroup) -> MTCData:
    """MTC data of D(G) for an abelian group with at most eight elements.

    F is trivial and R^{ab}_{a×b} = χ_b(g_a), the charge of b evaluated at the
    flux of a.
    """
    if not group.is_abelian:
        raise NonAbelianGroupException(f"{group} is not abelian")
    if group.order > DEFAULT_ABELIAN_MTC_CAP:
        raise OrderCapExceededException(group.order, DEFAULT_ABELIAN_MTC_CAP)
    double = quantum_double(group)
    fusion = double.fusion
    count = len(double)
    product = np.argmax(fusion, axis=2)
    fluxes = [anyon.representative for anyon in double]
    r_entries = {
        (a, b, int(product[a, b])): double.chi(b, fluxes[a], fluxes[b])
        for a in range(count)
        for b in range(count)
    }
    f_entries = {}
    for a in range(count):
        for b in range(count):
            ab = product[a, b]
            for c in range(count):
                bc = product[b, c]
                f_entries[(a, b, c, int(product[ab, c]), int(ab), int(bc))] = 1 + 0j
    modular = double.modular_data
    data = MTCData(
        double.names,
        double.duals,
        double.quantum_dims,
        fusion,
        modular.s,
        modular.t,
        f_entries,
        r_entries,
        f"D({group.name})",
    )
    return validate_mtc(data)


def wrapping_eigenvalue(data: MTCData, a: Label, b: Label) -> complex:
    """Eigenvalue S_ab/d_b of wrapping a loop of a around a puncture of charge b."""
    a, b = data.index(a), data.index(b)
    return complex(data.s[a, b] / data.dims[b])


def braid_sigma_squared(
    data: MTCData, a1: Label, a2: Label, b1: Label, b2: Label, c: Label
) -> np.ndarray:
    """Double braid of two ribbon-attached punctures in the standard basis.

    The tree fuses a2 with a1 to c and c with b1 to b2. Returns the
    coefficients over the new channel c″, indexed by label:
    Σ_{c′} [F^{a2 a1 b1}_{b2}]_{c c′} R^{b1 a1}_{c′} R^{a1 b1}_{c′} [F⁻¹]_{c′ c″}.
    """
    a1, a2, b1, b2, c = (data.index(x) for x in (a1, a2, b1, b2, c))
    block = data.F_block(a2, a1, b1, b2)
    if c not in block.rows:
        raise InvalidFusionChannelException(
            f"{data._names(a2, a1)} -> ? with {data.labels[b1]} -> {data.labels[b2]}",
            data.labels[c],
        )
    if block.matrix.shape[0] != block.matrix.shape[1]:
        raise MTCConsistencyException("F-unitarity", "F block is not square")
    monodromy = np.array([data.R(b1, a1, x) * data.R(a1, b1, x) for x in block.cols])
    inverse = np.linalg.inv(block.matrix)
    row = block.matrix[block.rows.index(c)] * monodromy @ inverse
    result = np.zeros(len(data), dtype=complex)
    result[list(block.rows)] = row
    return result


def mutual_braiding(data: MTCData, a: Label, b: Label) -> complex:
    """Monodromy scalar Σ_c N_ab^c R^{ba}_c R^{ab}_c d_c/(d_a d_b)."""
    a, b = data.index(a), data.index(b)
    total = sum(
        data.R(b, a, c) * data.R(a, b, c) * data.dims[c] for c in data.channels(a, b)
    )
    return complex(total / (data.dims[a] * data.dims[b]))


def check_pentagon(
    data: MTCData, samples: int = DEFAULT_SPOT_CHECKS, seed: int = DEFAULT_SEED
) -> float:
    """Largest pentagon residual over randomly drawn outer labels.

    [F^{fcd}_e]_{gl}[F^{abl}_e]_{fk} = Σ_h [F^{abc}_g]_{fh}[F^{ahd}_e]_{gk}[F^{bcd}_k]_{hl}
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    count = len(data)
    for _ in range(samples):
        a, b, c, d = (int(x) for x in rng.integers(count, size=4))
        for f in data.channels(a, b):
            for g in data.channels(f, c):
                for e in data.channels(g, d):
                    for l in data.channels(c, d):
                        if not data.fusion[f, l, e]:
                            continue
                        for k in data.channels(b, l):
                            if not data.fusion[a, k, e]:
                                continue
                            left = data.F(f, c, d, e, g, l) * data.F(a, b, l, e, f, k)
                            right = sum(
                                data.F(a, b, c, g, f, h)
                                * data.F(a, h, d, e, g, k)
                                * data.F(b, c, d, k, h, l)
                                for h in data.channels(b, c)
                            )
                            worst = max(worst, abs(left - right))
    _LOGGER.debug("%s: pentagon residual %.3g", data.name, worst)
    return worst


def check_hexagon(
    data: MTCData, samples: int = DEFAULT_SPOT_CHECKS, seed: int = DEFAULT_SEED
) -> float:
    """Largest residual of both hexagon equations over random outer labels."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    count = len(data)
    for _ in range(samples):
        a, b, c = (int(x) for x in rng.integers(count, size=3))
        for e in data.channels(a, c):
            for d in data.channels(e, b):
                for g in data.channels(c, b):
                    if not data.fusion[a, g, d]:
                        continue
                    left = data.R(c, a, e) * data.F(a, c, b, d, e, g) * data.R(c, b, g)
                    right = sum(
                        data.F(c, a, b, d, e, f)
                        * data.R(c, f, d)
                        * data.F(a, b, c, d, f, g)
                        for f in data.channels(a, b)
                    )
                    inverse_left = (
                        data.F(a, c, b, d, e, g) / (data.R(a, c, e) * data.R(b, c, g))
                    )
                    inverse_right = sum(
                        data.F(c, a, b, d, e, f)
                        / data.R(f, c, d)
                        * data.F(a, b, c, d, f, g)
                        for f in data.channels(a, b)
                    )
                    worst = max(
                        worst, abs(left - right), abs(inverse_left - inverse_right)
                    )
    _LOGGER.debug("%s: hexagon residual %.3g", data.name, worst)
    return worst


class WallData:
    """M-symbols of a domain wall from a source theory to a target theory.

    Leaf symbols [M^{ef;x}_{x';ab}]_ρ^{μν} are keyed (e, f, x, x', a, b) and
    stored with axes (ρ, μ, ν); root symbols [M^{x'g;d}_{h;xc}]^{ρλ}_α are keyed
    (x', g, d, h, x, c) with axes (ρ, λ, α). Keys hold label names.
    """

    def __init__(
        self,
        source: MTCData,
        target: MTCData,
        leaf_symbols: dict[SymbolKey, np.ndarray],
        root_symbols: dict[SymbolKey, np.ndarray],
    ) -> None:
        self.source = source
        self.target = target
        self.leaf_symbols = {
            tuple(key): np.asarray(value, dtype=complex).reshape(_rank3(value))
            for key, value in leaf_symbols.items()
        }
        self.root_symbols = {
            tuple(key): np.asarray(value, dtype=complex).reshape(_rank3(value))
            for key, value in root_symbols.items()
        }

    def leaf(self, key: Sequence[str]) -> Optional[np.ndarray]:
        """Return a leaf symbol or None."""
        return self.leaf_symbols.get(tuple(key))

    def root(self, key: Sequence[str]) -> Optional[np.ndarray]:
        """Return a root symbol or None."""
        return self.root_symbols.get(tuple(key))


def _rank3(value: Any) -> tuple[int, int, int]:
    shape = np.shape(value)
    if len(shape) > 3:
        raise ShapeMismatchException(f"M-symbol of shape {shape} has too many axes")
    return tuple(shape) + (1,) * (3 - len(shape))


def load_wall(
    source: MTCData, target: MTCData, wall: Union[str, Path, dict]
) -> WallData:
    """Load M-symbols from a JSON file or parsed dict."""
    raw = _read(wall, WALL_SCHEMA)
    families = []
    for name in ("leaf_symbols", "root_symbols"):
        families.append(
            {
                tuple(entry["key"]): _complex_array(entry["value"], 3)
                for entry in raw[name]
            }
        )
    return WallData(source, target, *families)


def dump_wall(wall: WallData) -> dict[str, Any]:
    """Serialize to the JSON layout read by load_wall."""
    return {
        "schema_version": SCHEMA_VERSION,
        "source": wall.source.name,
        "target": wall.target.name,
        "leaf_symbols": [
            {"key": list(key), "value": _array_to_json(value)}
            for key, value in sorted(wall.leaf_symbols.items())
        ],
        "root_symbols": [
            {"key": list(key), "value": _array_to_json(value)}
            for key, value in sorted(wall.root_symbols.items())
        ],
    }


def automorphism_wall(data: MTCData, permutation: Sequence[int]) -> WallData:
    """Wall of a label permutation with unit M-symbols on every allowed vertex."""
    names = data.labels
    sigma = [names[int(p)] for p in permutation]
    symbols = {
        (sigma[a], sigma[b], names[x], sigma[x], names[a], names[b]): np.ones((1, 1, 1))
        for a in range(len(data))
        for b in range(len(data))
        for x in data.channels(a, b)
    }
    # leaf (e, f, x, x', a, b) and root (x', g, d, h, x, c) keys coincide here
    return WallData(data, data, symbols, dict(symbols))


def identity_wall(data: MTCData) -> WallData:
    """Trivial wall of a theory onto itself."""
    return automorphism_wall(data, range(len(data)))


def em_duality_wall(group: FiniteGroup) -> WallData:
    """Electric-magnetic duality wall of D(Z_n)."""
    data = builtin_abelian_double(group)
    return automorphism_wall(data, np.argmax(em_duality(group), axis=0))


def gauge_transform_wall(wall: WallData, unitary: np.ndarray) -> WallData:
    """Change the ρ basis of every symbol whose ρ axis matches the unitary.

    Leaf symbols transform with V and root symbols with V̄, which leaves the
    ρ contraction of u_matrix unchanged.
    """
    unitary = np.asarray(unitary, dtype=complex)
    size = len(unitary)

    def leaf(value: np.ndarray) -> np.ndarray:
        if value.shape[0] != size:
            return value
        return np.einsum("rs,smn->rmn", unitary, value)

    def root(value: np.ndarray) -> np.ndarray:
        if value.shape[0] != size:
            return value
        return np.einsum("rs,sla->rla", unitary.conj(), value)

    return WallData(
        wall.source,
        wall.target,
        {key: leaf(value) for key, value in wall.leaf_symbols.items()},
        {key: root(value) for key, value in wall.root_symbols.items()},
    )


class UMatrix(NamedTuple):
    """Transition matrix U[x', x] of a three-anyon fusion tree."""

    rows: list[str]
    cols: list[str]
    matrix: np.ndarray


def u_matrix(
    wall: WallData,
    labels: Sequence[Label],
    mu: int = 0,
    nu: int = 0,
    lam: int = 0,
) -> UMatrix:
    """U_{x'x} = Σ_{ρ,α} [M^{ef;x}_{x';ab}]_ρ^{μν} [M^{x'g;d}_{h;xc}]^{ρλ}_α.

    ``labels`` holds a, b, c, d of the source tree and e, f, g, h of the
    target tree. Columns run over x with a⊗b → x and x⊗c → d, rows over x'
    with e⊗f → x' and x'⊗g → h.
    """
    if len(labels) != 8:
        raise ShapeMismatchException(f"Expected 8 labels a..h, got {len(labels)}")
    source, target = wall.source, wall.target
    a, b, c, d = (source.index(x) for x in labels[:4])
    e, f, g, h = (target.index(x) for x in labels[4:])
    xs = [x for x in source.channels(a, b) if source.fusion[x, c, d]]
    primes = [x for x in target.channels(e, f) if target.fusion[x, g, h]]
    s_names, t_names = source.labels, target.labels
    matrix = np.zeros((len(primes), len(xs)), dtype=complex)
    for row, xp in enumerate(primes):
        for col, x in enumerate(xs):
            leaf_key = (t_names[e], t_names[f], s_names[x], t_names[xp])
            root_key = (t_names[xp], t_names[g], s_names[d], t_names[h])
            first = wall.leaf(leaf_key + (s_names[a], s_names[b]))
            second = wall.root(root_key + (s_names[x], s_names[c]))
            if first is None or second is None:
                continue
            if first.shape[0] != second.shape[0]:
                raise ShapeMismatchException(
                    f"ρ dimensions {first.shape[0]} and {second.shape[0]} differ"
                )
            matrix[row, col] = np.sum(first[:, mu, nu] @ second[:, lam, :])
    return UMatrix([t_names[x] for x in primes], [s_names[x] for x in xs], matrix)


def is_logical_preserving(
    u: Union[UMatrix, np.ndarray], tolerance: float = DEFAULT_TOLERANCE
) -> bool:
    """Return whether U†U = c·id with c > 0."""
    matrix = np.asarray(u.matrix if isinstance(u, UMatrix) else u, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or not matrix.size:
        return False
    gram = matrix.conj().T @ matrix
    scale = float(np.real(np.trace(gram))) / len(gram)
    return bool(
        scale > tolerance
        and np.abs(gram - scale * np.eye(len(gram))).max() <= tolerance
    )


def ribbon_path_coefficients(
    data: MTCData,
    wall: WallData,
    labels: Sequence[Label],
    indices: Sequence[int] = (0, 0, 0, 0, 0, 0),
    bullets: Optional[Sequence[Label]] = None,
) -> np.ndarray:
    """Coefficient tensor [g, h, i, k, j] of a ribbon path between two subphases.

    Product C^{δR}_g·C^{MM}_{h,i}·C^{FF}_{k,j}·C^{δFF} with
    C^{δR}_g = sqrt(d_g/(d_a d_d))·N_{ad}^g·R^{ad}_g,
    C^{MM}_{h,i} = (M^{p q,h}_{s,a* b})_γ^{αμ}·(M^{p' q',i}_{s',f a})_ε^{λβ},
    C^{FF}_{k,j} = (F^{c c* a}_a)_{k1}·(F^{c f a}_g)_{jd} and
    C^{δFF} = δ_ij·sqrt(d_a d_f/d_i)·F^{h b* c}_{k*;e a*}·sqrt(d_b* d_c/d_e)
    ·F^{k* c* g}_{d;j a*}·sqrt(d_c* d_g/d_j).

    ``labels`` holds a, b, c, d, e, f. ``indices`` holds γ, α, μ, ε, λ, β.
    ``bullets`` holds the wall labels (p, q, s, p', q', s'); by default the
    M-symbols are read at the trivial embedding (a*, b, h, h) and (f, a, i, i).
    """
    a, b, c, d, e, f = (data.index(x) for x in labels)
    gamma, alpha, mu, epsilon, lam, beta = indices
    names = data.labels
    dual = data.duals
    dims = data.dims
    count = len(data)
    tensor = np.zeros((count,) * 5, dtype=complex)
    for g in data.channels(a, d):
        delta_r = np.sqrt(dims[g] / (dims[a] * dims[d])) * data.R(a, d, g)
        for h in data.channels(dual[a], b):
            outer = (
                (names[dual[a]], names[b], names[h], names[h])
                if bullets is None
                else (bullets[0], bullets[1], names[h], bullets[2])
            )
            first_key = outer + (names[dual[a]], names[b])
            first = wall.leaf(first_key)
            if first is None:
                continue
            for i in data.channels(f, a):
                inner = (
                    (names[f], names[a], names[i], names[i])
                    if bullets is None
                    else (bullets[3], bullets[4], names[i], bullets[5])
                )
                second_key = inner + (names[f], names[a])
                second = wall.leaf(second_key)
                if second is None:
                    continue
                mm = first[gamma, alpha, mu] * second[epsilon, lam, beta]
                j = i
                for k in range(count):
                    ff = data.F(c, dual[c], a, a, k, 0) * data.F(c, f, a, g, j, d)
                    if ff == 0:
                        continue
                    kd = dual[k]
                    dff = (
                        np.sqrt(dims[a] * dims[f] / dims[i])
                        * data.F(h, dual[b], c, kd, e, dual[a])
                        * np.sqrt(dims[dual[b]] * dims[c] / dims[e])
                        * data.F(kd, dual[c], g, d, j, dual[a])
                        * np.sqrt(dims[dual[c]] * dims[g] / dims[j])
                    )
                    tensor[g, h, i, k, j] = delta_r * mm * ff * dff
    return tensor


def _image(matrix: np.ndarray, column: np.ndarray) -> set[int]:
    return {int(x) for x in np.flatnonzero(matrix @ column)}


def compatibility_check(
    theta0: Union[TunnelingMap, np.ndarray],
    theta1: Union[TunnelingMap, np.ndarray],
    phi0: Union[TunnelingMap, np.ndarray],
    phi1: Union[TunnelingMap, np.ndarray],
    d_minus: int,
) -> tuple[bool, list[int]]:
    """Test θ¹(φ_0(d₋)) ∩ φ_1(θ⁰(d₋)) ≠ ∅ on image label sets.

    θ^t are the spatial walls at times 0 and 1, φ_0 and φ_1 the temporal maps
    of the inner and outer phase. Returns the verdict and the shared labels.
    """
    theta0, theta1, phi0, phi1 = (
        np.asarray(m.matrix if isinstance(m, TunnelingMap) else m)
        for m in (theta0, theta1, phi0, phi1)
    )
    start = np.zeros(phi0.shape[1], dtype=np.int64)
    start[d_minus] = 1
    first = _image(theta1, phi0 @ start)
    second = _image(phi1, theta0 @ start)
    shared = sorted(first & second)
    return bool(shared), shared
