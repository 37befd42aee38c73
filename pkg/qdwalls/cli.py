"""
Command line interface for qdwalls.

SPDX-License-Identifier: Apache-2.0

Every library module is exposed as a subcommand. Tables are printed as aligned
text by default and as JSON with ``--json``; domain failures end with a JSON
diagnostic and exit code 2, usage errors with exit code 1.
"""

import argparse
import json
import logging
import os
from pathlib import Path
import sys
from typing import Any, Optional, Sequence

import numpy as np
import voluptuous as vol

from .condensation import (
    PhaseSpec,
    condensable_algebra,
    enumerate_phases,
    is_lagrangian,
)
from .config import RunConfig, load_run_config
from .const import (
    CONF_CACHE_DIR,
    CONF_DEBUG,
    CONF_FORMAT,
    CONF_GROUP,
    CONF_ORDER_CAP,
    CONF_SEED,
    CONF_STATE_QUBIT_CAP,
    CONF_TOLERANCE,
    DEFAULT_MAX_SCHEDULE_LEN,
    DEFAULT_SPOT_CHECKS,
    ENV_CACHE_DIR,
    EXIT_OK,
    EXIT_USAGE,
    GOLDEN_GROUPS,
    LISTED_PRESETS,
    OUTPUT_FORMATS,
    __version__,
)
from .exceptions import (
    GoldenMismatchException,
    MTCConsistencyException,
    NumericalFailureException,
    QuantumDoubleException,
    SchemaException,
)
from .floquet import (
    brute_force_conditional_unitary,
    check_schedule,
    enumerate_phase_specs,
    enumerate_schedules,
    is_legal_transition,
    to_dot,
    transition_graph,
    tree_paths,
)
from .golden import diff_golden, golden_path, regen_golden
from .group import FiniteGroup, build_group
from .helpers import catch_domain_errors, complex_to_json
from .lattice import TorusLattice, fidelity_trace_csv, run_schedule
from .mtc import (
    builtin_abelian_double,
    check_hexagon,
    check_pentagon,
    dump_mtc,
    dump_wall,
    em_duality_wall,
    is_logical_preserving,
    load_mtc,
    load_wall,
    u_matrix,
)
from .qdouble import quantum_double
from .tunneling import TunnelingProblem, tunneling_map

_LOGGER = logging.getLogger(__name__)

SCHEDULE_SCHEMA = vol.Schema(
    vol.All(
        [vol.All(vol.ExactSequence([vol.Any(str, list), vol.Any(str, list)]))],
        vol.Length(min=1),
    )
)


class _ArgumentParser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with EXIT_USAGE."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(config: RunConfig, payload: Any, text: str) -> None:
    if config[CONF_FORMAT] == "json":
        print(json.dumps(payload, indent=2, ensure_ascii=False))
    else:
        print(text)


def _table(rows: Sequence[dict[str, Any]]) -> str:
    """Render dict rows as aligned text columns."""
    if not rows:
        return "(none)"
    columns = list(rows[0])
    cells = [[str(row.get(column, "")) for column in columns] for row in rows]
    widths = [
        max(len(column), *(len(line[i]) for line in cells))
        for i, column in enumerate(columns)
    ]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
    lines.extend(
        "  ".join(c.ljust(w) for c, w in zip(line, widths)).rstrip() for line in cells
    )
    return "\n".join(lines)


def _group(config: RunConfig) -> FiniteGroup:
    return build_group(config[CONF_GROUP], config[CONF_ORDER_CAP])


def _phase(group: FiniteGroup, text: str) -> PhaseSpec:
    """Parse "M/N"; a bare "M" means N = {e}."""
    numerator, _, denominator = text.partition("/")
    return PhaseSpec(group, numerator, denominator or [])


def _spin(value: complex) -> float:
    return round(float(np.angle(value) / (2 * np.pi)) % 1.0, 6) % 1.0


@catch_domain_errors
def cmd_groups(args: argparse.Namespace, config: RunConfig) -> int:
    """List the preset groups with their orders and anyon counts."""
    names = [config[CONF_GROUP]] if config.get(CONF_GROUP) else LISTED_PRESETS
    rows = []
    for name in names:
        group = build_group(name, config[CONF_ORDER_CAP])
        rows.append(
            {
                "group": group.name,
                "order": group.order,
                "abelian": group.is_abelian,
                "classes": len(group.conjugacy_classes),
                "subgroups": len(group.subgroups),
                "anyons": len(quantum_double(group)),
            }
        )
    _emit(config, rows, _table(rows))
    return EXIT_OK


@catch_domain_errors
def cmd_anyons(args: argparse.Namespace, config: RunConfig) -> int:
    """Print the anyon table of D(G)."""
    group = _group(config)
    double = quantum_double(group)
    twists = double.modular_data.t
    rows = [
        {
            "name": anyon.name,
            "class": group.label(anyon.representative),
            "centralizer": anyon.centralizer.order,
            "irrep_dim": anyon.irrep_dim,
            "dim": anyon.quantum_dim,
            "spin": _spin(twists[anyon.index]),
        }
        for anyon in double
    ]
    _emit(config, rows, _table(rows))
    return EXIT_OK


@catch_domain_errors
def cmd_condense(args: argparse.Namespace, config: RunConfig) -> int:
    """Print condensable algebras of one derived phase or of all of them."""
    group = _group(config)
    if args.all:
        phases = enumerate_phases(group)
    else:
        phases = [PhaseSpec(group, args.M or "G", args.N or [])]
    algebras = [condensable_algebra(phase) for phase in phases]
    rows = [
        {
            "M": algebra.phase.M.label,
            "N": algebra.phase.N.label,
            "algebra": str(algebra),
            "dim": algebra.dim,
            "lagrangian": is_lagrangian(algebra),
        }
        for algebra in algebras
    ]
    _emit(config, [algebra.as_dict() for algebra in algebras], _table(rows))
    return EXIT_OK


@catch_domain_errors
def cmd_tunnel(args: argparse.Namespace, config: RunConfig) -> int:
    """Print the anyon-tunneling map from the right phase into the left phase."""
    group = _group(config)
    problem = TunnelingProblem(
        group, _phase(group, args.left), _phase(group, args.right)
    )
    phi = tunneling_map(problem)
    text = "\n".join(
        [
            f"{problem.right.key} → {problem.left.key}",
            phi.format(),
            json.dumps(phi.matrix.tolist()),
        ]
    )
    _emit(config, phi.as_dict(), text)
    return EXIT_OK


@catch_domain_errors
def cmd_floquet(args: argparse.Namespace, config: RunConfig) -> int:
    """Transition graph, schedules, tree codes and oracle comparison."""
    group = _group(config)
    target = build_group(args.quotient, config[CONF_ORDER_CAP])
    only = None
    if args.phases:
        only = [_phase(group, text) for text in args.phases.split(";")]
    specs = enumerate_phase_specs(group, target, not args.allow_non_normal, only)
    graph = transition_graph(specs)
    if args.action == "graph":
        if config[CONF_FORMAT] == "dot":
            print(to_dot(graph))
            return EXIT_OK
        nodes = [
            {"id": node, "M": spec.M.label, "N": spec.N.label}
            for node, spec in graph.specs.items()
        ]
        text = "\n".join(
            [_table(nodes), "", f"{len(graph.edges)} legal pairs:"]
            + [f"{u} -- {v}" for u, v in graph.edges]
        )
        _emit(config, graph.as_dict(), text)
    elif args.action == "schedules":
        schedules = enumerate_schedules(graph, args.max_len, args.self_loops)
        rows = [
            {
                "schedule": str(schedule),
                "period": schedule.period,
                "automorphism": schedule.automorphism,
            }
            for schedule in schedules
        ]
        _emit(config, [s.as_dict() for s in schedules], _table(rows))
    elif args.action == "trees":
        paths = tree_paths(graph, args.max_len)
        _emit(
            config,
            [list(path) for path in paths],
            "\n".join("→".join(str(node) for node in path) for path in paths),
        )
    elif args.action == "check":
        if not args.nodes:
            raise SchemaException("check needs --nodes, e.g. 1,8,1")
        schedule = check_schedule(graph, args.nodes.split(","))
        text = f"{schedule}: legal, automorphism={schedule.automorphism}"
        _emit(config, schedule.as_dict(), text)
    else:
        rows = []
        for u, source in graph.specs.items():
            for v, target_spec in graph.specs.items():
                if u >= v:
                    continue
                legal = is_legal_transition(source, target_spec)
                oracle = brute_force_conditional_unitary(source, target_spec)
                rows.append({"u": u, "v": v, "legal": legal, "oracle": oracle})
        disagreements = [row for row in rows if row["legal"] != row["oracle"]]
        if disagreements:
            first = disagreements[0]
            raise NumericalFailureException(
                f"{first['u']} -> {first['v']}: oracle and overlap test disagree"
            )
        _emit(config, rows, _table(rows))
    return EXIT_OK


def _load_schedule(group: FiniteGroup, path: str) -> list[PhaseSpec]:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        entries = SCHEDULE_SCHEMA(raw)
    except (OSError, ValueError) as ex:
        raise SchemaException(f"Unable to read schedule {path}: {ex}") from ex
    except vol.Invalid as ex:
        raise SchemaException(f"Invalid schedule {path}: {ex}") from ex
    return [
        PhaseSpec(group, numerator, denominator, str(step))
        for step, (numerator, denominator) in enumerate(entries)
    ]


@catch_domain_errors
def cmd_sim(args: argparse.Namespace, config: RunConfig) -> int:
    """Run a measurement schedule on the torus state-vector simulator."""
    group = _group(config)
    specs = _load_schedule(group, args.schedule)
    run = run_schedule(
        TorusLattice.parse(args.torus),
        specs,
        logical=args.logical,
        seed=config[CONF_SEED],
        allow_illegal=args.allow_illegal,
        qubit_cap=config[CONF_STATE_QUBIT_CAP],
    )
    if args.record:
        Path(args.record).write_text(
            json.dumps(run.record.as_dict(), indent=2) + "\n", encoding="utf-8"
        )
        _LOGGER.info("Wrote measurement record to %s", args.record)
    payload = {
        "trace": [row._asdict() for row in run.trace],
        "final_fidelity": run.final_fidelity,
        "record": run.record.as_dict(),
    }
    _emit(config, payload, fidelity_trace_csv(run.trace).rstrip("\n"))
    return EXIT_OK


def _mtc_source(args: argparse.Namespace, config: RunConfig):
    if args.data:
        return load_mtc(args.data, config[CONF_TOLERANCE])
    if not config.get(CONF_GROUP):
        raise SchemaException("mtc check needs --data or --group")
    return builtin_abelian_double(_group(config))


@catch_domain_errors
def cmd_mtc(args: argparse.Namespace, config: RunConfig) -> int:
    """Check MTC data and evaluate the wall transition matrix."""
    if args.action == "builtin":
        group = _group(config)
        if args.em_wall:
            payload = dump_wall(em_duality_wall(group))
        else:
            payload = dump_mtc(builtin_abelian_double(group))
        print(json.dumps(payload, indent=2, ensure_ascii=False))
        return EXIT_OK
    tolerance = config[CONF_TOLERANCE]
    data = _mtc_source(args, config)
    pentagon = check_pentagon(data, args.samples, config[CONF_SEED])
    hexagon = check_hexagon(data, args.samples, config[CONF_SEED])
    if pentagon > tolerance:
        raise MTCConsistencyException("pentagon", f"residual {pentagon:.3g}")
    if hexagon > tolerance:
        raise MTCConsistencyException("hexagon", f"residual {hexagon:.3g}")
    report: dict[str, Any] = {
        "name": data.name,
        "labels": data.labels,
        "total_dimension": data.total_dimension,
        "pentagon_residual": pentagon,
        "hexagon_residual": hexagon,
    }
    lines = [
        f"{data.name}: {len(data)} labels, D = {data.total_dimension:.6g}",
        f"pentagon residual {pentagon:.3g}, hexagon residual {hexagon:.3g}",
    ]
    if args.wall:
        target = load_mtc(args.target, tolerance) if args.target else data
        wall = load_wall(data, target, args.wall)
        report["wall"] = {
            "leaf_symbols": len(wall.leaf_symbols),
            "root_symbols": len(wall.root_symbols),
        }
        lines.append(
            f"wall: {len(wall.leaf_symbols)} leaf and "
            f"{len(wall.root_symbols)} root symbols"
        )
        if args.u:
            u = u_matrix(wall, args.u.split(","))
            preserving = is_logical_preserving(u, tolerance)
            report["u"] = {
                "rows": u.rows,
                "cols": u.cols,
                "matrix": [[complex_to_json(x) for x in row] for row in u.matrix],
                "logical_preserving": preserving,
            }
            lines.append(f"U rows {u.rows} cols {u.cols}")
            lines.extend(
                "  ".join(f"{x.real:+.6f}{x.imag:+.6f}j" for x in row)
                for row in u.matrix
            )
            lines.append(f"logical preserving: {preserving}")
    elif args.u:
        raise SchemaException("--u needs a --wall file")
    _emit(config, report, "\n".join(lines))
    return EXIT_OK


@catch_domain_errors
def cmd_golden(args: argparse.Namespace, config: RunConfig) -> int:
    """Regenerate or diff the golden tables."""
    names = args.names or GOLDEN_GROUPS
    if args.action == "regen":
        paths = regen_golden(names, args.dir)
        _emit(config, [str(p) for p in paths], "\n".join(str(p) for p in paths))
        return EXIT_OK
    report = {name: diff_golden(name, args.dir) for name in names}
    lines = []
    for name, mismatches in report.items():
        lines.append(f"{name}: {len(mismatches)} mismatching cells")
        lines.extend(
            f"  {m['cell']}: expected {m['expected']!r}, got {m['actual']!r}"
            for m in mismatches
        )
    _emit(config, report, "\n".join(lines))
    stale = [name for name, mismatches in report.items() if mismatches]
    if stale:
        raise GoldenMismatchException(
            ", ".join(str(golden_path(name, args.dir)) for name in stale),
            [dict(m, group=name) for name in stale for m in report[name]],
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with one subparser per command."""
    common = _ArgumentParser(add_help=False)
    common.add_argument(
        "--group", help="Preset name (S3, D4, Z2xZ2, ...) or JSON spec file."
    )
    common.add_argument("--json", action="store_true", help="Emit JSON.")
    common.add_argument("--format", choices=OUTPUT_FORMATS, help="Output format.")
    common.add_argument("--tol", type=float, help="Numerical tolerance.")
    common.add_argument("--seed", type=int, help="Random seed.")
    common.add_argument("--order-cap", type=int, help="Largest accepted group order.")
    common.add_argument(
        "--debug", action="store_true", default=None, help="Debug logging."
    )
    common.add_argument("--config", help="JSON run configuration file.")

    parser = _ArgumentParser(
        prog="qdwalls", description="Phase structure of quantum double models."
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    groups = subparsers.add_parser(
        "groups", parents=[common], help="List preset groups."
    )
    groups.set_defaults(func=cmd_groups, needs_group=False)

    anyons = subparsers.add_parser("anyons", parents=[common], help="Anyons of D(G).")
    anyons.set_defaults(func=cmd_anyons, needs_group=True)

    condense = subparsers.add_parser(
        "condense", parents=[common], help="Condensable algebras of derived phases."
    )
    condense.add_argument("--M", help="Subgroup M as element labels, or G.")
    condense.add_argument("--N", help="Subgroup N normal in M as element labels.")
    condense.add_argument("--all", action="store_true", help="Every (M, N).")
    condense.set_defaults(func=cmd_condense, needs_group=True)

    tunnel = subparsers.add_parser(
        "tunnel", parents=[common], help="Anyon-tunneling map across a wall."
    )
    tunnel.add_argument("--left", required=True, help="Target phase M'/N'.")
    tunnel.add_argument("--right", required=True, help="Source phase M/N.")
    tunnel.set_defaults(func=cmd_tunnel, needs_group=True)

    floquet = subparsers.add_parser(
        "floquet", parents=[common], help="Legal transitions and schedules."
    )
    floquet.add_argument(
        "action", choices=["graph", "schedules", "trees", "check", "oracle"]
    )
    floquet.add_argument("--quotient", required=True, help="Logical group M/N.")
    floquet.add_argument("--max-len", type=int, default=DEFAULT_MAX_SCHEDULE_LEN)
    floquet.add_argument("--nodes", help="Closed walk for check, e.g. 1,8,3,10,1.")
    floquet.add_argument("--self-loops", action="store_true")
    floquet.add_argument("--allow-non-normal", action="store_true")
    floquet.add_argument(
        "--phases", help="Keep only these M/N phases, separated by semicolons."
    )
    floquet.set_defaults(func=cmd_floquet, needs_group=True)

    sim = subparsers.add_parser("sim", help="Lattice state-vector simulation.")
    sim_commands = sim.add_subparsers(dest="sim_command", required=True)
    run = sim_commands.add_parser("run", parents=[common], help="Run a schedule.")
    run.add_argument("--torus", default="2x2", help="Torus size WxH.")
    run.add_argument("--schedule", required=True, help="JSON list of [M, N] pairs.")
    run.add_argument("--logical", default="0", help="Logical basis index or random.")
    run.add_argument("--record", help="Write the measurement record JSON here.")
    run.add_argument("--allow-illegal", action="store_true")
    run.set_defaults(func=cmd_sim, needs_group=True)

    mtc = subparsers.add_parser("mtc", help="MTC gate calculus.")
    mtc_commands = mtc.add_subparsers(dest="action", required=True)
    check = mtc_commands.add_parser("check", parents=[common], help="Check MTC data.")
    check.add_argument("--data", help="MTC JSON file; defaults to the builtin double.")
    check.add_argument("--target", help="MTC JSON file of the wall target.")
    check.add_argument("--wall", help="M-symbol JSON file.")
    check.add_argument("--u", help="Labels a,b,c,d,e,f,g,h of the U matrix.")
    check.add_argument("--samples", type=int, default=DEFAULT_SPOT_CHECKS)
    check.set_defaults(func=cmd_mtc, needs_group=False)
    builtin = mtc_commands.add_parser(
        "builtin", parents=[common], help="Dump the builtin abelian double."
    )
    builtin.add_argument("--em-wall", action="store_true", help="Dump the e-m wall.")
    builtin.set_defaults(func=cmd_mtc, needs_group=True)

    golden = subparsers.add_parser("golden", help="Golden tables.")
    golden_commands = golden.add_subparsers(dest="action", required=True)
    for action in ("regen", "diff"):
        sub = golden_commands.add_parser(action, parents=[common])
        sub.add_argument("names", nargs="*", help="Reference groups, default all.")
        sub.add_argument("--dir", help="Directory of the golden files.")
        sub.set_defaults(func=cmd_golden, needs_group=False)
    return parser


def _configure(args: argparse.Namespace) -> RunConfig:
    overrides = {
        CONF_GROUP: args.group,
        CONF_TOLERANCE: args.tol,
        CONF_SEED: args.seed,
        CONF_FORMAT: "json" if args.json else args.format,
        CONF_ORDER_CAP: args.order_cap,
        CONF_DEBUG: args.debug,
    }
    config = load_run_config(overrides, args.config)
    if config.get(CONF_CACHE_DIR):
        os.environ[ENV_CACHE_DIR] = config[CONF_CACHE_DIR]
    return config


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, configure logging and dispatch."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as ex:
        return int(ex.code or 0)
    try:
        config = _configure(args)
    except QuantumDoubleException as ex:
        print(f"qdwalls: error: {ex}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=logging.DEBUG if config[CONF_DEBUG] else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    if args.needs_group and not config.get(CONF_GROUP):
        print("qdwalls: error: --group is required", file=sys.stderr)
        return EXIT_USAGE
    _LOGGER.debug("Running %s with %s", args.command, config)
    return args.func(args, config)


if __name__ == "__main__":
    sys.exit(main())
