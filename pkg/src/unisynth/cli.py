"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 input/format/fragment
error, 3 resource limit, 10 unrealizable.
"""
from __future__ import annotations

import argparse
import csv
import os
import signal
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import bench
from .automata import (AutomatonFormatError, ResourceLimitExceeded, dsa_to_dot, ltl_to_dsa,
                       parse_arch)
from .baseline import standard_synthesis
from .logic import Architecture, LtlError, parse_ltl
from .machines import MooreMachine, machine_to_dot, parallel, read_mm, write_mm
from .membership import MembershipCache
from .synthesis import (Unrealizable, compose, extract_controller, read_uc, universal_controller,
                        write_uc)
from .verify import format_lasso, verify

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_RESOURCE, EXIT_UNREALIZABLE = 0, 1, 2, 3, 10

CSV_COLUMNS = ["timestamp", "benchmark", "grid_size", "spec_type", "method", "time_ms", "dsa_states",
               "uc_states", "composition_states", "controller_states", "games_solved", "cache_hits",
               "verdict"]


class InputError(Exception):
    pass


class Timeout(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _flag_arch(args) -> Architecture | None:
    if args.arch_env is None and args.arch_ctrl is None and args.arch_plant is None:
        return None
    split = lambda s: (s or "").replace(",", " ").split()
    return Architecture(split(args.arch_env), split(args.arch_ctrl), split(args.arch_plant))


def load_spec(path: str, args) -> tuple:
    """Formula text with an optional ``arch:`` line; flags override the file."""
    arch = None
    body = []
    for raw in _read(path).splitlines():
        line = raw.split("#", 1)[0].strip()
        if line.startswith("arch:"):
            arch = parse_arch(line[len("arch:"):])
        elif line:
            body.append(line)
    arch = _flag_arch(args) or arch
    if arch is None:
        raise InputError("no architecture: give --arch-env/--arch-ctrl/--arch-plant or an 'arch:' line")
    if not body:
        raise InputError(f"{path}: no formula")
    return parse_ltl(" ".join(body), arch), arch


def load_machine(path: str) -> MooreMachine:
    return read_mm(_read(path))


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_universal(args) -> int:
    f, arch = load_spec(args.spec, args)
    u = universal_controller(f, arch, max_states=args.max_states)
    _emit(dsa_to_dot(u.skeleton) if args.dot else write_uc(u), args.output)
    print(f"universal controller: {u.n_states} states", file=sys.stderr)
    return EXIT_OK


def _print_controller(ctrl: MooreMachine, args) -> None:
    _emit(machine_to_dot(ctrl) if args.dot else write_mm(ctrl), args.output)


def cmd_compose(args) -> int:
    u = read_uc(_read(args.uc))
    plant = load_machine(args.plant)
    heur = not args.no_heuristics
    try:
        c = compose(u, plant, heuristics=heur, order=args.tie_break, terminal_shortcut=heur)
    except Unrealizable:
        print("UNREALIZABLE")
        return EXIT_UNREALIZABLE
    ctrl = extract_controller(c, args.tie_break)
    _print_controller(ctrl, args)
    print(f"composition: {len(c.states)} states, controller: {ctrl.n_states} states, "
          f"games solved: {c.stats['games_solved']}", file=sys.stderr)
    return EXIT_OK


def cmd_standard(args) -> int:
    f, arch = load_spec(args.spec, args)
    plant = load_machine(args.plant)
    try:
        ctrl, stats = standard_synthesis(f, plant, arch, max_states=args.max_states)
    except Unrealizable:
        print("UNREALIZABLE")
        return EXIT_UNREALIZABLE
    _print_controller(ctrl, args)
    print(f"controller: {ctrl.n_states} states, {stats['total_ms']:.1f} ms", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    ctrl = load_machine(args.controller)
    plant = load_machine(args.plant)
    f, arch = load_spec(args.spec, args)
    result = verify(parallel(plant, ctrl), f, arch)
    if result.ok:
        print("OK")
        return EXIT_OK
    print("FAIL")
    print(format_lasso(result.counterexample, arch.ap))
    return EXIT_FAIL


def _deadline(seconds: float | None):
    def handler(signum, frame):
        raise Timeout()

    if seconds:
        signal.signal(signal.SIGALRM, handler)
        signal.setitimer(signal.ITIMER_REAL, seconds)


def _clear_deadline():
    signal.setitimer(signal.ITIMER_REAL, 0)


def run_unicon(f, arch, plant, heuristics: bool = True) -> dict:
    """Universal controller then composition on one instance; returns a CSV row fragment."""
    t0 = time.perf_counter()
    u = universal_controller(f, arch)
    cache = MembershipCache()
    row = {"dsa_states": u.n_states, "uc_states": u.n_states}
    try:
        c = compose(u, plant, heuristics=heuristics, cache=cache, terminal_shortcut=heuristics)
        ctrl = extract_controller(c)
        row.update(verdict="REALIZABLE", composition_states=len(c.states),
                   controller_states=ctrl.n_states, controller=ctrl)
    except Unrealizable as exc:
        row.update(verdict="UNREALIZABLE", composition_states=exc.stats.get("composition_states", ""),
                   controller_states="", controller=None)
    row.update(time_ms=(time.perf_counter() - t0) * 1000, games_solved=cache.games_solved,
               cache_hits=cache.cache_hits)
    return row


def run_standard(f, arch, plant) -> dict:
    t0 = time.perf_counter()
    a = ltl_to_dsa(f, arch)
    row = {"dsa_states": a.n_states, "uc_states": "", "composition_states": "", "games_solved": 1,
           "cache_hits": ""}
    try:
        ctrl, _ = standard_synthesis(a, plant)
        row.update(verdict="REALIZABLE", controller_states=ctrl.n_states, controller=ctrl)
    except Unrealizable:
        row.update(verdict="UNREALIZABLE", controller_states="", controller=None)
    row["time_ms"] = (time.perf_counter() - t0) * 1000
    return row


def cmd_bench(args) -> int:
    if args.plant or args.spec:
        if not (args.plant and args.spec):
            raise InputError("--plant and --spec must be given together")
        plant = load_machine(args.plant)
        f, arch = load_spec(args.spec, args)
        name, size, stype = Path(args.plant).stem, "", ""
    else:
        if args.walls == "maze":
            g = bench.maze(args.size, args.maze_seed)
        else:
            g = bench.GridWorld(args.size)
        plant = bench.gen_plant(g)
        f, arch = bench.gen_spec(args.spec_type)
        name, size, stype = f"grid-{args.walls}", args.size, args.spec_type
    methods = ["unicon", "standard"] if args.method == "both" else [args.method]
    rows = []
    for method in methods:
        base = {"timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                "benchmark": name, "grid_size": size, "spec_type": stype, "method": method}
        t0 = time.perf_counter()
        try:
            _deadline(args.timeout)
            if method == "unicon":
                row = run_unicon(f, arch, plant, heuristics=not args.no_heuristics)
            else:
                row = run_standard(f, arch, plant)
        except Timeout:
            row = {"verdict": "TIMEOUT", "time_ms": (time.perf_counter() - t0) * 1000}
        finally:
            _clear_deadline()
        row.pop("controller", None)
        rows.append({**{c: "" for c in CSV_COLUMNS}, **base, **row})
    for row in rows:
        row["time_ms"] = f"{float(row['time_ms']):.3f}"
        print(f"{row['method']:9s} {row['verdict']:13s} {row['time_ms']:>10s} ms  "
              f"games_solved={row['games_solved']} cache_hits={row['cache_hits']}")
    if args.stats:
        new = not os.path.exists(args.stats) or os.path.getsize(args.stats) == 0
        with open(args.stats, "a", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            if new:
                writer.writeheader()
            writer.writerows(rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--arch-env", help="environment propositions (space or comma separated)")
    common.add_argument("--arch-ctrl", help="controller propositions")
    common.add_argument("--arch-plant", help="plant propositions")
    common.add_argument("--dot", action="store_true", help="emit Graphviz DOT instead of text format")
    common.add_argument("-o", "--output", help="write the artifact here instead of stdout")
    common.add_argument("--max-states", type=int, default=10**6,
                        help="automaton state cap; exceeding it exits with code 3")

    parser = argparse.ArgumentParser(prog="unisynth", description="Universal safety controller synthesis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("universal", parents=[common], help="build a universal controller")
    p.add_argument("spec")
    p.set_defaults(func=cmd_universal)

    p = sub.add_parser("compose", parents=[common], help="adapt a universal controller to a plant")
    p.add_argument("uc")
    p.add_argument("plant")
    p.add_argument("--tie-break", choices=["min", "max"], default="min")
    p.add_argument("--no-heuristics", action="store_true")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("standard", parents=[common], help="standard game-based synthesis")
    p.add_argument("spec")
    p.add_argument("plant")
    p.set_defaults(func=cmd_standard)

    p = sub.add_parser("verify", parents=[common], help="check controller || plant against a spec")
    p.add_argument("controller")
    p.add_argument("plant")
    p.add_argument("spec")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", parents=[common], help="run the grid benchmark")
    p.add_argument("--size", type=int, default=3)
    p.add_argument("--spec-type", type=int, choices=[1, 2, 3], default=1)
    p.add_argument("--method", choices=["unicon", "standard", "both"], default="both")
    p.add_argument("--stats", help="append CSV rows to this file")
    p.add_argument("--timeout", type=float, help="seconds per method before a TIMEOUT row")
    p.add_argument("--walls", choices=["none", "maze"], default="none")
    p.add_argument("--maze-seed", type=int, default=0)
    p.add_argument("--no-heuristics", action="store_true")
    p.add_argument("--plant", help="use this plant file instead of a generated grid")
    p.add_argument("--spec", help="specification file to go with --plant")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, LtlError, AutomatonFormatError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ResourceLimitExceeded as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
