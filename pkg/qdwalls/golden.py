"""
Golden tables for the reference groups.

SPDX-License-Identifier: Apache-2.0

Each reference group has one committed JSON file under ``qdwalls/data`` holding
its anyon table, the condensable algebras of its derived phases and a few
tunneling maps out of the parent phase. ``regen`` rebuilds the files from the
library; ``diff`` reports every cell that differs from a fresh build.
"""

import json
import logging
from pathlib import Path
from typing import Any, Iterable, Optional, Union

from packaging import version

from .condensation import (
    PhaseSpec,
    condensable_algebra,
    enumerate_phases,
    is_lagrangian,
    parent_phase,
)
from .const import (
    DEFAULT_TOLERANCE,
    GOLDEN_GROUPS,
    MIN_SCHEMA_VERSION,
    SCHEMA_VERSION,
)
from .exceptions import (
    GoldenMismatchException,
    NumericalFailureException,
    SchemaException,
)
from .group import FiniteGroup, preset_group
from .qdouble import quantum_double
from .tunneling import TunnelingProblem, tunneling_map

_LOGGER = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent / "data"

# (M, N) of every phase whose tunneling map from the parent is recorded
GOLDEN_CASES: dict[str, dict[str, Any]] = {
    "S3": {
        "algebras": True,
        "tunneling": [("σ", "e"), ("G", "τ"), ("τ", "e")],
    },
    "D4": {
        "algebras": False,
        "tunneling": [("r2,s", "r2")],
    },
    "Z2xZ2": {
        "algebras": True,
        "tunneling": [],
    },
}


def golden_path(name: str, directory: Optional[Union[str, Path]] = None) -> Path:
    """Return the golden file of a reference group."""
    return Path(directory or DATA_DIR) / f"{name}.json"


def self_check(group: FiniteGroup, tolerance: float = DEFAULT_TOLERANCE) -> None:
    """Raise unless the character table and the double pass their identities."""
    residual = group.character_table.orthogonality_residual()
    if residual > tolerance:
        raise NumericalFailureException(
            f"{group.name}: character orthogonality residual {residual:.3g}"
        )
    double = quantum_double(group)
    _LOGGER.debug(
        "%s: modular data verified for %s anyons",
        group.name,
        len(double.modular_data.t),
    )
    if int(sum(d * d for d in double.quantum_dims)) != group.order**2:
        raise NumericalFailureException(
            f"{group.name}: squared quantum dimensions do not sum to |G|²"
        )


def _anyon_rows(group: FiniteGroup) -> list[dict[str, Any]]:
    return [
        {
            "name": anyon.name,
            "class": group.label(anyon.representative),
            "centralizer": anyon.centralizer.order,
            "dim": anyon.quantum_dim,
        }
        for anyon in quantum_double(group)
    ]


def _algebra_rows(group: FiniteGroup) -> list[dict[str, Any]]:
    rows = []
    for phase in enumerate_phases(group):
        algebra = condensable_algebra(phase)
        rows.append(
            {
                "M": phase.M.label,
                "N": phase.N.label,
                "algebra": str(algebra),
                "lagrangian": is_lagrangian(algebra),
            }
        )
    return rows


def _tunneling_rows(group: FiniteGroup, cases: Iterable[tuple]) -> list[dict[str, Any]]:
    parent = parent_phase(group)
    rows = []
    for numerator, denominator in cases:
        phase = PhaseSpec(group, numerator, denominator)
        phi = tunneling_map(TunnelingProblem(group, phase, parent))
        rows.append({"phase": phase.key, "images": phi.images()})
    return rows


def build_golden(name: str) -> dict[str, Any]:
    """Build the golden table of a reference group."""
    if name not in GOLDEN_CASES:
        raise SchemaException(f"No golden table for {name!r}")
    cases = GOLDEN_CASES[name]
    group = preset_group(name)
    self_check(group)
    table: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "group": name,
        "order": group.order,
        "anyons": _anyon_rows(group),
    }
    if cases["algebras"]:
        table["algebras"] = _algebra_rows(group)
    table["tunneling"] = _tunneling_rows(group, cases["tunneling"])
    _LOGGER.debug("%s: built golden table with %s anyons", name, len(table["anyons"]))
    return table


def load_golden(path: Union[str, Path]) -> dict[str, Any]:
    """Read a golden file and check its schema version."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as ex:
        raise SchemaException(f"Unable to read golden file {path}: {ex}") from ex
    if not isinstance(data, dict) or "schema_version" not in data:
        raise SchemaException(f"{path} has no schema_version")
    if version.parse(str(data["schema_version"])) < version.parse(MIN_SCHEMA_VERSION):
        raise SchemaException(
            f"{path}: schema version {data['schema_version']} is older than "
            f"{MIN_SCHEMA_VERSION}"
        )
    return data


def diff_tables(expected: Any, actual: Any, prefix: str = "") -> list[dict[str, Any]]:
    """List every cell where two tables differ.

    Cells are addressed like ``anyons[3].dim``; a missing cell is reported
    with ``None`` on the side it is missing from.
    """
    if isinstance(expected, dict) and isinstance(actual, dict):
        mismatches = []
        for key in list(expected) + [k for k in actual if k not in expected]:
            cell = f"{prefix}.{key}" if prefix else str(key)
            mismatches.extend(diff_tables(expected.get(key), actual.get(key), cell))
        return mismatches
    if isinstance(expected, list) and isinstance(actual, list):
        mismatches = []
        for index in range(max(len(expected), len(actual))):
            mismatches.extend(
                diff_tables(
                    expected[index] if index < len(expected) else None,
                    actual[index] if index < len(actual) else None,
                    f"{prefix}[{index}]",
                )
            )
        return mismatches
    if expected == actual:
        return []
    return [{"cell": prefix, "expected": expected, "actual": actual}]


def diff_golden(
    name: str, directory: Optional[Union[str, Path]] = None
) -> list[dict[str, Any]]:
    """Compare a committed golden file against a fresh build."""
    return diff_tables(load_golden(golden_path(name, directory)), build_golden(name))


def check_golden(name: str, directory: Optional[Union[str, Path]] = None) -> None:
    """Raise GoldenMismatchException when a golden file is stale."""
    mismatches = diff_golden(name, directory)
    if mismatches:
        raise GoldenMismatchException(str(golden_path(name, directory)), mismatches)


def regen_golden(
    names: Optional[Iterable[str]] = None,
    directory: Optional[Union[str, Path]] = None,
) -> list[Path]:
    """Rebuild golden files; nothing is written unless every build succeeds."""
    names = list(names or GOLDEN_GROUPS)
    tables = {name: build_golden(name) for name in names}
    paths = []
    for name, table in tables.items():
        path = golden_path(name, directory)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(table, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
        _LOGGER.info("Wrote %s", path)
        paths.append(path)
    return paths
