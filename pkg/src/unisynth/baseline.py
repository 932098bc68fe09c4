"""Standard game-based synthesis on the specification x plant product."""
from __future__ import annotations

import time
from collections import deque

from .automata import SafetyAutomaton, ltl_to_dsa
from .logic import Architecture, LtlFormula, remap_table
from .machines import MooreMachine, check_role, explore
from .synthesis import Unrealizable


def _solve(a: SafetyAutomaton, plant: MooreMachine):
    """Build the reachable game and return ``(nodes, moves, winning)``.

    ``nodes`` are ``(q, s)`` pairs; ``moves[v][c]`` lists the successor
    node ids for controller output ``c``, one per environment output.
    """
    arch = a.arch
    n_env, n_ctrl = arch.n_env, arch.n_ctrl
    n_in = n_env + n_ctrl
    to_input = remap_table(arch.env + arch.ctrl, plant.inputs)
    to_label = remap_table(plant.outputs, arch.plant)
    start = (a.init, plant.init)
    ids = {start: 0}
    nodes = [start]
    moves: list[list[list[int]]] = []
    i = 0
    while i < len(nodes):
        q, s = nodes[i]
        per_c: list[list[int]] = []
        if q in a.safe:
            lab = to_label[plant.out[s]] << n_in
            for c in range(1 << n_ctrl):
                row = []
                for e in range(1 << n_env):
                    beta = e | c << n_env
                    nxt = (a.trans[q][lab | beta], plant.trans[s][to_input[beta]])
                    j = ids.get(nxt)
                    if j is None:
                        j = ids[nxt] = len(nodes)
                        nodes.append(nxt)
                    row.append(j)
                per_c.append(row)
        moves.append(per_c)
        i += 1

    # bad[v]: v is an unsafe node or the environment can force one
    n = len(nodes)
    preds: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for v, per_c in enumerate(moves):
        for c, row in enumerate(per_c):
            for w in set(row):
                preds[w].append((v, c))
    bad = [nodes[v][0] not in a.safe for v in range(n)]
    alive = [len(per_c) for per_c in moves]  # controller outputs not yet losing
    dead_c = [set() for _ in range(n)]
    queue = deque(v for v in range(n) if bad[v])
    while queue:
        w = queue.popleft()
        for v, c in preds[w]:
            if bad[v] or c in dead_c[v]:
                continue
            dead_c[v].add(c)
            alive[v] -= 1
            if alive[v] == 0:
                bad[v] = True
                queue.append(v)
    return nodes, moves, bad, dead_c


def standard_synthesis(f: LtlFormula | SafetyAutomaton, plant: MooreMachine,
                       arch: Architecture | None = None, **dsa_options) -> tuple[MooreMachine, dict]:
    """Positional controller for ``plant`` or :class:`Unrealizable`.

    At every node the smallest winning controller output is taken.
    Returns the controller together with timing and size counters.
    """
    t0 = time.perf_counter()
    if isinstance(f, SafetyAutomaton):
        a = f
    else:
        if arch is None:
            raise ValueError("an architecture is required for a formula")
        a = ltl_to_dsa(f, arch, **dsa_options)
    arch = a.arch
    check_role(plant, arch)
    t1 = time.perf_counter()
    nodes, moves, bad, dead_c = _solve(a, plant)
    t2 = time.perf_counter()
    stats = {"dsa_states": a.n_states, "game_nodes": len(nodes),
             "dsa_ms": (t1 - t0) * 1000, "solve_ms": (t2 - t1) * 1000}
    if bad[0]:
        raise Unrealizable("initial node is losing", stats)

    n_env = arch.n_env
    env_mask = (1 << n_env) - 1

    def output(v):
        return min(c for c in range(len(moves[v])) if c not in dead_c[v])

    def successor(v, letter):
        return moves[v][output(v)][letter & env_mask]

    ctrl = explore(arch.env + arch.plant, arch.ctrl, 0, successor, output, role="controller",
                   name=lambda v: f"q{nodes[v][0]}|{plant.names[nodes[v][1]]}")
    stats["controller_states"] = ctrl.n_states
    stats["total_ms"] = (time.perf_counter() - t0) * 1000
    return ctrl, stats
