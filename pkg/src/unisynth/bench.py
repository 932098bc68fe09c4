"""Robot-in-a-grid benchmark family.

The controlled robot starts in the center, an uncontrolled robot in the
corner. Both move simultaneously by 3-bit codes (0 stay, 1 up, 2 down,
3 left, 4 right, anything else stays); moves into walls are ignored.
The plant reports blocked directions and collisions.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .logic import (Architecture, Atom, Globally, LtlFormula, Next, Not, WeakUntil, conj, disj,
                    implies)
from .machines import MooreMachine, explore

CTRL_BITS = ("mv0", "mv1", "mv2")
ENV_BITS = ("e0", "e1", "e2")
SENSORS = ("u_obs", "d_obs", "l_obs", "r_obs", "col")
ARCH = Architecture(env=ENV_BITS, ctrl=CTRL_BITS, plant=SENSORS)

STAY, UP, DOWN, LEFT, RIGHT = range(5)
DELTA = {STAY: (0, 0), UP: (0, 1), DOWN: (0, -1), LEFT: (-1, 0), RIGHT: (1, 0)}

Cell = tuple[int, int]


def decode(code: int) -> int:
    return code if code <= RIGHT else STAY


@dataclass(frozen=True)
class GridWorld:
    n: int
    walls: frozenset[frozenset[Cell]] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"grid side must be at least 2, got {self.n}")

    @property
    def ctrl_start(self) -> Cell:
        return (self.n // 2, self.n // 2)

    @property
    def plant_start(self) -> Cell:
        return (0, 0)

    def inside(self, c: Cell) -> bool:
        return 0 <= c[0] < self.n and 0 <= c[1] < self.n

    def blocked(self, c: Cell, d: int) -> bool:
        dx, dy = DELTA[d]
        t = (c[0] + dx, c[1] + dy)
        return not self.inside(t) or frozenset((c, t)) in self.walls

    def move(self, c: Cell, d: int) -> Cell:
        if d == STAY or self.blocked(c, d):
            return c
        dx, dy = DELTA[d]
        return (c[0] + dx, c[1] + dy)

    def sensors(self, me: Cell, other: Cell) -> dict[str, bool]:
        out = {}
        for name, d in (("u_obs", UP), ("d_obs", DOWN), ("l_obs", LEFT), ("r_obs", RIGHT)):
            dx, dy = DELTA[d]
            out[name] = self.blocked(me, d) or other == (me[0] + dx, me[1] + dy)
        out["col"] = me == other
        return out


def maze(n: int, seed: int, loop_rate: float = 0.3) -> GridWorld:
    """Random spanning-tree maze with some extra openings."""
    rng = random.Random(seed)
    cells = [(x, y) for x in range(n) for y in range(n)]
    walls = set()
    for x, y in cells:
        if x + 1 < n:
            walls.add(frozenset(((x, y), (x + 1, y))))
        if y + 1 < n:
            walls.add(frozenset(((x, y), (x, y + 1))))
    visited = {(0, 0)}
    stack = [(0, 0)]
    while stack:
        x, y = stack[-1]
        options = [c for c in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1))
                   if 0 <= c[0] < n and 0 <= c[1] < n and c not in visited]
        if not options:
            stack.pop()
            continue
        nxt = rng.choice(options)
        walls.discard(frozenset(((x, y), nxt)))
        visited.add(nxt)
        stack.append(nxt)
    for w in sorted(walls, key=lambda w: sorted(w)):
        if rng.random() < loop_rate:
            walls.discard(w)
    return GridWorld(n, frozenset(walls))


def gen_plant(g: GridWorld) -> MooreMachine:
    """Plant over states (controlled robot cell, other robot cell)."""
    inputs = CTRL_BITS + ENV_BITS

    def successor(k, letter):
        me, other = k
        return g.move(me, decode(letter & 7)), g.move(other, decode(letter >> 3))

    def output(k):
        s = g.sensors(*k)
        return sum(1 << i for i, name in enumerate(SENSORS) if s[name])

    return explore(inputs, SENSORS, (g.ctrl_start, g.plant_start), successor, output, role="plant",
                   name=lambda k: f"c{k[0][0]}_{k[0][1]}_o{k[1][0]}_{k[1][1]}")


def move_formula(code_set, bits=CTRL_BITS) -> LtlFormula:
    """Disjunction over the 3-bit codes in ``code_set``."""
    terms = []
    for code in sorted(code_set):
        terms.append(conj(*(Atom(b) if code >> i & 1 else Not(Atom(b)) for i, b in enumerate(bits))))
    return disj(*terms)


def gen_spec(t: int) -> tuple[LtlFormula, Architecture]:
    col, up = Atom("col"), Atom("u_obs")
    if t == 1:
        return Globally(Not(col)), ARCH
    if t == 2:
        stay = move_formula({0, 5, 6, 7})
        guarded = disj(
            conj(Atom("u_obs"), move_formula({UP})),
            conj(Atom("d_obs"), move_formula({DOWN})),
            conj(Atom("l_obs"), move_formula({LEFT})),
            conj(Atom("r_obs"), move_formula({RIGHT})),
            stay,
        )
        assump = implies(Next(col), guarded)
        return WeakUntil(Not(col), Not(assump)), ARCH
    if t == 3:
        return conj(Next(Not(up)), Next(Next(Not(up))), Next(Next(Next(Not(up))))), ARCH
    raise ValueError(f"unknown specification type {t}")
