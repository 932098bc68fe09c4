"""Plant membership in a safe prophecy, decided by a safety game.

The system player picks controller outputs, the environment picks
environment outputs, and the plant answers deterministically. Branches
where the plant input disagrees with the chosen controller output lead
to the accepting sink of the prophecy automaton and are dropped, so the
environment only ranges over ``2^{O_e}``.
"""
from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass, field

from .logic import remap_table
from .machines import MooreMachine
from .prophecy import INITIAL, ProphecyAutomaton


@dataclass
class SafetyGame:
    """Explicit bipartite game graph.

    System nodes are keyed ``(q, s)`` and environment nodes ``(q, s, c)``
    where ``c`` is the controller output (a mask over ``arch.ctrl``) just
    chosen. ``q`` is a base-automaton state or the fresh initial state.
    """

    keys: list[tuple]
    succ: list[list[int]]
    is_env: list[bool]
    unsafe: set[int]
    root: int
    index: dict[tuple, int] = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.keys)

    def node(self, key: tuple) -> int:
        return self.index[key]

    def system_nodes(self) -> list[int]:
        return [v for v in range(self.n_nodes) if not self.is_env[v]]

    def env_nodes(self) -> list[int]:
        return [v for v in range(self.n_nodes) if self.is_env[v]]


class _PlantView:
    """Plant transitions and labels re-indexed by architecture encodings."""

    def __init__(self, plant: MooreMachine, arch):
        if set(plant.outputs) != set(arch.plant):
            raise ValueError(f"plant outputs {sorted(plant.outputs)} do not match {sorted(arch.plant)}")
        if not set(plant.inputs) <= set(arch.env) | set(arch.ctrl):
            raise ValueError(f"plant reads {sorted(plant.inputs)}, not all controller/environment outputs")
        n_in = arch.n_env + arch.n_ctrl
        beta_to_input = remap_table(arch.env + arch.ctrl, plant.inputs)
        out_to_label = remap_table(plant.outputs, arch.plant)
        self.label = [out_to_label[o] << n_in for o in plant.out]
        # trans[s][beta] with beta over env bits then ctrl bits
        self.trans = [[row[beta_to_input[b]] for b in range(1 << n_in)] for row in plant.trans]


_views: dict[tuple[int, int], tuple[object, object, _PlantView]] = {}
_views_lock = threading.Lock()


def _view(plant: MooreMachine, arch) -> _PlantView:
    key = (id(plant), id(arch))
    hit = _views.get(key)
    if hit is not None and hit[0] is plant and hit[1] is arch:
        return hit[2]
    v = _PlantView(plant, arch)
    with _views_lock:
        if len(_views) > 64:
            _views.clear()
        _views[key] = (plant, arch, v)
    return v


def build_game(p: ProphecyAutomaton, plant: MooreMachine, plant_state: int | None = None, *,
               shared: bool = False, terminal_shortcut: bool = False) -> SafetyGame:
    """Reachable game for ``plant`` (started in ``plant_state``) against ``p``.

    With ``shared`` the root is the system node ``(anchor, plant_state)``
    with every controller output available, so the solved region answers
    all anchors reachable from it at once. Otherwise the root is the fresh
    initial node whose only move is the anchor output.

    ``terminal_shortcut`` stops expansion at automaton states that cannot
    reach the unsafe sink; such nodes are winning leaves.
    """
    a = p.base
    arch = a.arch
    view = _view(plant, arch)
    s0 = plant.init if plant_state is None else plant_state
    if not 0 <= s0 < plant.n_states:
        raise KeyError(f"unknown plant state {plant_state}")
    n_env, n_ctrl = arch.n_env, arch.n_ctrl
    env_range = range(1 << n_env)
    ctrl_range = range(1 << n_ctrl)
    safe = a.safe
    leaves = a.trap_safe if terminal_shortcut else frozenset()
    trans = a.trans

    keys: list[tuple] = []
    succ: list[list[int]] = []
    is_env: list[bool] = []
    index: dict[tuple, int] = {}
    unsafe: set[int] = set()
    pending: deque[int] = deque()  # system nodes awaiting expansion

    def new_system(key: tuple) -> int:
        v = index[key] = len(keys)
        keys.append(key)
        succ.append([])
        is_env.append(False)
        if key[0] != INITIAL and key[0] not in safe:
            unsafe.add(v)
        elif key[0] not in leaves:
            pending.append(v)
        return v

    root = new_system((p.anchor_state, s0) if shared else (INITIAL, s0))
    lookup = index.get
    while pending:
        v = pending.popleft()
        q, s = keys[v]
        if q == INITIAL:
            q, choices = p.anchor_state, (p.anchor_output,)
        else:
            choices = ctrl_range
        row = trans[q]
        lab = view.label[s]
        prow = view.trans[s]
        env_ids = []
        for c in choices:
            u = index[(q, s, c)] = len(keys)
            keys.append((q, s, c))
            is_env.append(True)
            out: list[int] = []
            succ.append(out)
            env_ids.append(u)
            base = c << n_env
            for e in env_range:
                b = base | e
                key = (row[lab | b], prow[b])
                w = lookup(key)
                out.append(new_system(key) if w is None else w)
        succ[v] = env_ids
    return SafetyGame(keys, succ, is_env, unsafe, root, index)


def solve_safety(g: SafetyGame) -> set[int]:
    """Winning region of the system player.

    Computes the environment attractor of the unsafe nodes with a worklist
    and per-node outdegree counters, and returns its complement.
    """
    preds: list[list[int]] = [[] for _ in range(g.n_nodes)]
    for v, out in enumerate(g.succ):
        for w in out:
            preds[w].append(v)
    count = [len(out) for out in g.succ]
    losing = [False] * g.n_nodes
    work = deque()
    for v in sorted(g.unsafe):
        losing[v] = True
        work.append(v)
    while work:
        w = work.popleft()
        for v in preds[w]:
            if losing[v]:
                continue
            if g.is_env[v]:
                losing[v] = True
                work.append(v)
            else:
                count[v] -= 1
                if count[v] == 0:
                    losing[v] = True
                    work.append(v)
    return {v for v in range(g.n_nodes) if not losing[v]}


class MembershipCache:
    """Write-once map ``(automaton state, controller output, plant state) -> bool``.

    Entries are scoped per (automaton, plant) pair. Inserting an answer
    that contradicts an existing entry raises, since entries are final.
    """

    def __init__(self):
        self._tables: dict[tuple[int, int], dict[tuple[int, int, int], bool]] = {}
        self._owners: dict[tuple[int, int], tuple[object, object]] = {}
        self._lock = threading.Lock()
        self.games_built = 0
        self.games_solved = 0
        self.cache_hits = 0
        self.cache_misses = 0

    def _table(self, automaton, plant) -> dict:
        ctx = (id(automaton), id(plant))
        table = self._tables.get(ctx)
        if table is None or self._owners[ctx][0] is not automaton or self._owners[ctx][1] is not plant:
            with self._lock:
                table = self._tables[ctx] = {}
                self._owners[ctx] = (automaton, plant)
        return table

    def lookup(self, automaton, plant, key: tuple[int, int, int]) -> bool | None:
        return self._table(automaton, plant).get(key)

    def insert_many(self, automaton, plant, items) -> None:
        table = self._table(automaton, plant)
        with self._lock:
            for key, value in items:
                old = table.setdefault(key, value)
                if old != value:
                    raise AssertionError(f"membership cache contradiction at {key}")

    def __len__(self) -> int:
        return sum(len(t) for t in self._tables.values())

    @property
    def stats(self) -> dict[str, int]:
        return {"games_built": self.games_built, "games_solved": self.games_solved,
                "cache_hits": self.cache_hits, "cache_misses": self.cache_misses}


def is_member(plant: MooreMachine, p: ProphecyAutomaton, cache: MembershipCache | None = None, *,
              plant_state: int | None = None, terminal_shortcut: bool = False) -> bool:
    """Whether ``plant`` (from ``plant_state``, default its initial state) lies in ``p``.

    Without a cache a single game rooted at the fresh initial node is built.
    With a cache a miss solves the shared game rooted at the anchor and
    stores the verdict of every environment node it contains.
    """
    a = p.base
    s = plant.init if plant_state is None else plant_state
    q, alpha = p.anchor_state, p.anchor_output
    if q not in a.safe:
        return False
    if terminal_shortcut and q in a.trap_safe:
        return True
    if cache is None:
        g = build_game(p, plant, s, terminal_shortcut=terminal_shortcut)
        return g.root in solve_safety(g)
    key = (q, alpha, s)
    hit = cache.lookup(a, plant, key)
    if hit is not None:
        cache.cache_hits += 1
        return hit
    cache.cache_misses += 1
    g = build_game(p, plant, s, shared=True, terminal_shortcut=terminal_shortcut)
    cache.games_built += 1
    win = solve_safety(g)
    cache.games_solved += 1
    cache.insert_many(a, plant, (((k[0], k[2], k[1]), v in win)
                                 for v, k in enumerate(g.keys) if g.is_env[v]))
    return cache.lookup(a, plant, key)
