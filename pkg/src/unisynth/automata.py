"""Deterministic safety automata and the translation from safety LTL.

The translation is formula progression: states are residues of the input
formula, kept in a canonical propositional form over temporal atoms (maximal
``X``/``W``/``G``/``R`` subformulas and literals). The residue ``false`` is
the only unsafe state.
"""
from __future__ import annotations

import functools
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .logic import (
    FALSE,
    TRUE,
    And,
    Architecture,
    Atom,
    FalseConst,
    Globally,
    LassoWord,
    LtlFormula,
    Next,
    Not,
    Or,
    Release,
    TrueConst,
    UnknownProposition,
    WeakUntil,
    atoms,
    letters_to_formula,
    parse_ltl,
    prop_models,
    remap_table,
    to_safety_nnf,
    to_text,
)


class ResourceLimitExceeded(RuntimeError):
    """A construction hit its configured state cap."""


class AutomatonFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SafetyAutomaton:
    """Deterministic safety automaton over the letters of ``arch``.

    ``trans[q][letter]`` is the successor; letters use the architecture's
    bit encoding. A run is accepting iff it stays inside ``safe``.
    """

    arch: Architecture
    trans: tuple[tuple[int, ...], ...]
    init: int
    safe: frozenset[int]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        n = len(self.trans)
        if len(self.labels) != n:
            object.__setattr__(self, "labels", tuple(f"q{i}" for i in range(n)))
        if not 0 <= self.init < n:
            raise ValueError(f"initial state {self.init} out of range")
        width = self.arch.n_letters
        for q, row in enumerate(self.trans):
            if len(row) != width:
                raise ValueError(f"state {q} has {len(row)} edges, expected {width}")
            for t in row:
                if not 0 <= t < n:
                    raise ValueError(f"state {q} has an edge to unknown state {t}")
        if not self.safe <= set(range(n)):
            raise ValueError("safe set mentions unknown states")
        unsafe = [q for q in range(n) if q not in self.safe]
        if len(unsafe) > 1:
            raise ValueError(f"more than one unsafe state: {unsafe}")
        for q in unsafe:
            if any(t != q for t in self.trans[q]):
                raise ValueError(f"unsafe state {q} is not a sink")
        if len(self.reachable()) != n:
            raise ValueError("automaton has states unreachable from init")

    @property
    def n_states(self) -> int:
        return len(self.trans)

    @property
    def states(self) -> range:
        return range(len(self.trans))

    @cached_property
    def sink(self) -> int | None:
        """The unsafe sink, if the automaton has one."""
        for q in self.states:
            if q not in self.safe:
                return q
        return None

    @cached_property
    def trap_safe(self) -> frozenset[int]:
        """States from which no unsafe state is reachable."""
        if self.sink is None:
            return frozenset(self.states)
        preds: list[set[int]] = [set() for _ in self.states]
        for q, row in enumerate(self.trans):
            for t in set(row):
                preds[t].add(q)
        bad = {self.sink}
        stack = [self.sink]
        while stack:
            for p in preds[stack.pop()]:
                if p not in bad:
                    bad.add(p)
                    stack.append(p)
        return frozenset(q for q in self.states if q not in bad)

    def reachable(self, start: int | None = None) -> set[int]:
        start = self.init if start is None else start
        seen = {start}
        stack = [start]
        while stack:
            for t in set(self.trans[stack.pop()]):
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return seen

    def step(self, q: int, names: Iterable[str]) -> int:
        return self.trans[q][self.arch.mask(names)]

    def with_arch(self, arch: Architecture) -> "SafetyAutomaton":
        """Same automaton read over a reordered architecture with equal AP."""
        if set(arch.ap) != set(self.arch.ap):
            raise ValueError("architectures range over different propositions")
        table = remap_table(arch.ap, self.arch.ap)
        trans = tuple(tuple(row[table[m]] for m in range(arch.n_letters)) for row in self.trans)
        return SafetyAutomaton(arch, trans, self.init, self.safe, self.labels)


def trim(arch: Architecture, trans: Sequence[Sequence[int]], init: int,
         safe: Iterable[int], labels: Sequence[str] = ()) -> SafetyAutomaton:
    """Build an automaton from raw tables, keeping only reachable states."""
    order = [init]
    index = {init: 0}
    i = 0
    while i < len(order):
        for t in trans[order[i]]:
            if t not in index:
                index[t] = len(order)
                order.append(t)
        i += 1
    safe = set(safe)
    new_trans = tuple(tuple(index[t] for t in trans[q]) for q in order)
    new_safe = frozenset(index[q] for q in order if q in safe)
    new_labels = tuple(labels[q] for q in order) if labels else ()
    return SafetyAutomaton(arch, new_trans, 0, new_safe, new_labels)


# ---------------------------------------------------------------------------
# Residue normal form


@functools.lru_cache(maxsize=None)
def _key(f: LtlFormula) -> str:
    return to_text(f)


def _flatten(op: type, parts: Iterable[LtlFormula]) -> list[LtlFormula]:
    out = []
    stack = list(parts)
    while stack:
        g = stack.pop()
        if isinstance(g, op):
            stack.append(g.left)
            stack.append(g.right)
        else:
            out.append(g)
    return out


def _complement(g: LtlFormula) -> LtlFormula | None:
    if isinstance(g, Atom):
        return Not(g)
    if isinstance(g, Not):
        return g.operand
    return None


def _combine(op: type, parts: Iterable[LtlFormula]) -> LtlFormula:
    """Flatten, absorb constants, deduplicate and sort an ``op`` chain."""
    unit, zero = (TRUE, FALSE) if op is And else (FALSE, TRUE)
    dual = Or if op is And else And
    items: dict[str, LtlFormula] = {}
    for g in _flatten(op, parts):
        if g == zero:
            return zero
        if g == unit:
            continue
        items[_key(g)] = g
    for g in items.values():
        c = _complement(g)
        if c is not None and _key(c) in items:
            return zero
    # absorption: x & (x | y) = x, x | (x & y) = x
    keys = set(items)
    drop = set()
    for k, g in items.items():
        if isinstance(g, dual):
            inner = {_key(h) for h in _flatten(dual, [g])}
            if any(o != k and o in inner for o in keys):
                drop.add(k)
    parts = [items[k] for k in sorted(keys - drop)]
    if not parts:
        return unit
    out = parts[-1]
    for g in reversed(parts[:-1]):
        out = op(g, out)
    return out


def mk_and(*parts: LtlFormula) -> LtlFormula:
    return _combine(And, parts)


def mk_or(*parts: LtlFormula) -> LtlFormula:
    return _combine(Or, parts)


def _minimal(cubes) -> frozenset:
    kept: list[frozenset] = []
    for c in sorted(cubes, key=len):
        if not any(k <= c for k in kept):
            kept.append(c)
    return frozenset(kept)


def _consistent(c: frozenset) -> bool:
    return not any(isinstance(g, Not) and g.operand in c for g in c)


def _cubes(f: LtlFormula) -> frozenset:
    """DNF of the boolean layer as an antichain of cubes (sets of atoms)."""
    if isinstance(f, TrueConst):
        return frozenset({frozenset()})
    if isinstance(f, FalseConst):
        return frozenset()
    if isinstance(f, Or):
        return _minimal(_cubes(f.left) | _cubes(f.right))
    if isinstance(f, And):
        left, right = _cubes(f.left), _cubes(f.right)
        return _minimal({c for x in left for y in right for c in (x | y,) if _consistent(c)})
    return frozenset({frozenset({f})})


def normalize(f: LtlFormula) -> LtlFormula:
    """Canonical form of the boolean layer; temporal atoms stay untouched.

    The result is the subsumption-free DNF over temporal atoms and
    literals, with cubes and their members sorted by printed form. For
    the negation-free residues met during progression this form is unique
    up to propositional equivalence.
    """
    if not isinstance(f, (And, Or)):
        return f
    cubes = _cubes(f)
    if not cubes:
        return FALSE
    terms = []
    for c in cubes:
        items = sorted(c, key=_key)
        term = items[-1] if items else TRUE
        for g in reversed(items[:-1]):
            term = And(g, term)
        terms.append(term)
    terms.sort(key=_key)
    out = terms[-1]
    for g in reversed(terms[:-1]):
        out = Or(g, out)
    return out


def progress(f: LtlFormula, letter: frozenset[str]) -> LtlFormula:
    """Residue of ``f`` after reading one letter."""
    if isinstance(f, (TrueConst, FalseConst)):
        return f
    if isinstance(f, Atom):
        return TRUE if f.name in letter else FALSE
    if isinstance(f, Not):
        return FALSE if f.operand.name in letter else TRUE
    if isinstance(f, And):
        return mk_and(progress(f.left, letter), progress(f.right, letter))
    if isinstance(f, Or):
        return mk_or(progress(f.left, letter), progress(f.right, letter))
    if isinstance(f, Next):
        return normalize(f.operand)
    if isinstance(f, WeakUntil):
        return mk_or(progress(f.right, letter), mk_and(progress(f.left, letter), f))
    if isinstance(f, Globally):
        return mk_and(progress(f.operand, letter), f)
    if isinstance(f, Release):
        return mk_and(progress(f.right, letter), mk_or(progress(f.left, letter), f))
    raise TypeError(f"cannot progress {f!r}")


def _boolean_atoms(f: LtlFormula, out: dict[str, LtlFormula]) -> None:
    if isinstance(f, (And, Or)):
        _boolean_atoms(f.left, out)
        _boolean_atoms(f.right, out)
    elif not isinstance(f, (TrueConst, FalseConst)):
        out[_key(f)] = f


def _eval_boolean(f: LtlFormula, env: dict[str, bool]) -> bool:
    if isinstance(f, And):
        return _eval_boolean(f.left, env) and _eval_boolean(f.right, env)
    if isinstance(f, Or):
        return _eval_boolean(f.left, env) or _eval_boolean(f.right, env)
    if isinstance(f, TrueConst):
        return True
    if isinstance(f, FalseConst):
        return False
    return env[_key(f)]


def semantic_key(f: LtlFormula, max_atoms: int = 16):
    """Truth table over the temporal atoms the residue depends on.

    Returns ``None`` when there are too many atoms to tabulate.
    """
    found: dict[str, LtlFormula] = {}
    _boolean_atoms(f, found)
    names = sorted(found)
    if len(names) > max_atoms:
        return None
    k = len(names)
    table = []
    for m in range(1 << k):
        env = {name: bool(m >> i & 1) for i, name in enumerate(names)}
        table.append(_eval_boolean(f, env))
    relevant = [
        i for i in range(k)
        if any(table[m] != table[m ^ (1 << i)] for m in range(1 << k))
    ]
    sub = []
    for m in range(1 << len(relevant)):
        full = 0
        for j, i in enumerate(relevant):
            if m >> j & 1:
                full |= 1 << i
        sub.append(table[full])
    return tuple(names[i] for i in relevant), tuple(sub)


# ---------------------------------------------------------------------------
# Translation


_FALSE_KEY = ((), (False,))
_CONSTANT_KEYS = {_FALSE_KEY: FALSE, ((), (True,)): TRUE}


def ltl_to_dsa(f: LtlFormula, arch: Architecture, *, max_states: int = 10**6,
               collapse_threshold: int = 256) -> SafetyAutomaton:
    """Translate a safety formula into an equivalent deterministic safety automaton.

    Residues are first identified syntactically (after normalisation). Once
    more than ``collapse_threshold`` states exist, residues are additionally
    identified up to propositional equivalence over their temporal atoms.
    """
    f = to_safety_nnf(f)
    for name in atoms(f):
        if name not in arch:
            raise UnknownProposition(name)
    ap = arch.ap
    start = normalize(f)
    residues: list[LtlFormula] = [start]
    index: dict[LtlFormula, int] = {start: 0}
    sem_index: dict | None = None
    trans: list[list[int]] = []

    def lookup(r: LtlFormula) -> int:
        nonlocal sem_index
        if r in index:
            return index[r]
        if sem_index is None and len(residues) > collapse_threshold:
            sem_index = {}
            for i, old in enumerate(residues):
                key = semantic_key(old)
                if key is not None:
                    sem_index.setdefault(key, i)
        key = semantic_key(r) if sem_index is not None else None
        if key in _CONSTANT_KEYS:
            r = _CONSTANT_KEYS[key]
            if r in index:
                return index[r]
        if key is not None and key in sem_index:
            index[r] = sem_index[key]
            return index[r]
        if len(residues) >= max_states:
            raise ResourceLimitExceeded(f"more than {max_states} automaton states")
        index[r] = len(residues)
        residues.append(r)
        if key is not None:
            sem_index[key] = index[r]
        return index[r]

    i = 0
    while i < len(residues):
        r = residues[i]
        support = sorted(atoms(r))
        local = [lookup(normalize(progress(r, frozenset(n for j, n in enumerate(support) if m >> j & 1))))
                 for m in range(1 << len(support))]
        proj = remap_table(ap, support)
        trans.append([local[proj[letter]] for letter in range(arch.n_letters)])
        i += 1

    n = len(residues)
    false_ids = {q for q in range(n) if residues[q] == FALSE}
    if sem_index is not None:
        false_ids |= {q for q in range(n) if semantic_key(residues[q]) == _FALSE_KEY}
    bad = _doomed(trans, false_ids) | false_ids
    sink = None
    if bad:
        # states that cannot avoid `false` accept nothing; fold them into one sink
        sink = min(bad, key=lambda q: (residues[q] != FALSE, q))
        trans = [[sink if t in bad else t for t in row] for row in trans]
        trans[sink] = [sink] * arch.n_letters
        residues[sink] = FALSE
    safe = [q for q in range(n) if q not in bad]
    labels = [to_text(r) for r in residues]
    return trim(arch, trans, sink if 0 in bad else 0, safe, labels)


def _doomed(trans: list[list[int]], false_ids: set[int]) -> set[int]:
    """States all of whose paths reach ``false_ids`` (least fixpoint)."""
    if not false_ids:
        return set()
    doomed = set(false_ids)
    changed = True
    while changed:
        changed = False
        for q, row in enumerate(trans):
            if q not in doomed and all(t in doomed for t in row):
                doomed.add(q)
                changed = True
    return doomed - false_ids


# ---------------------------------------------------------------------------
# Runs and products


def dsa_accepts_lasso(a: SafetyAutomaton, w: LassoWord) -> bool:
    q = a.init
    if q not in a.safe:
        return False
    for letter in w.prefix:
        q = a.step(q, letter)
        if q not in a.safe:
            return False
    loop = [a.arch.mask(x) for x in w.loop]
    seen = set()
    pos = 0
    while (q, pos) not in seen:
        seen.add((q, pos))
        q = a.trans[q][loop[pos]]
        if q not in a.safe:
            return False
        pos = (pos + 1) % len(loop)
    return True


def product_reach(a: SafetyAutomaton, m) -> set[tuple[int, int]]:
    """Reachable ``(automaton state, machine state)`` pairs of ``a x m``.

    Branches over every valuation of the propositions the machine does not
    output.
    """
    return product_search(a, m)[0]


def product_search(a: SafetyAutomaton, m, stop_unsafe: bool = False):
    """BFS with parent pointers; optionally stops at the first unsafe state.

    Returns ``(seen, parent, hit)`` where ``parent[node] = (prev_node, letter)``
    and ``hit`` is the unsafe node found, if any.
    """
    arch = a.arch
    outputs = set(m.outputs)
    for name in list(m.inputs) + list(m.outputs):
        if name not in arch:
            raise UnknownProposition(name)
    free = [p for p in arch.ap if p not in outputs]
    to_global = remap_table(free, arch.ap)
    to_input = remap_table(free, m.inputs)
    out_global = remap_table(m.outputs, arch.ap)
    start = (a.init, m.init)
    seen = {start}
    parent: dict = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        q, s = node
        if stop_unsafe and q not in a.safe:
            return seen, parent, node
        o = out_global[m.out[s]]
        row = m.trans[s]
        for v in range(1 << len(free)):
            letter = to_global[v] | o
            nxt = (a.trans[q][letter], row[to_input[v]])
            if nxt not in seen:
                seen.add(nxt)
                parent[nxt] = (node, letter)
                queue.append(nxt)
    return seen, parent, None


# ---------------------------------------------------------------------------
# Text format and DOT


def _relevant_bits(row: Sequence[int], nbits: int) -> list[int]:
    return [i for i in range(nbits) if any(row[m] != row[m ^ (1 << i)] for m in range(len(row)))]


def guard_lines(row: Sequence[int], props: Sequence[str], names: Sequence[str]) -> list[str]:
    """Render one state's transition row as ``guard -> target`` lines.

    The target with the most letters gets ``else``.
    """
    bits = _relevant_bits(row, len(props))
    sub_props = [props[i] for i in bits]
    groups: dict[int, set[int]] = {}
    for m in range(1 << len(bits)):
        full = 0
        for j, i in enumerate(bits):
            if m >> j & 1:
                full |= 1 << i
        groups.setdefault(row[full], set()).add(m)
    targets = sorted(groups, key=lambda t: (len(groups[t]), -t))
    lines = []
    for t in targets[:-1]:
        lines.append(f"  {to_text(letters_to_formula(groups[t], sub_props))} -> {names[t]}")
    last = targets[-1]
    lines.append(f"  {'true' if len(targets) == 1 else 'else'} -> {names[last]}")
    return lines


def parse_guards(lines: list[tuple[int, str]], props: Sequence[str], state_ids: dict[str, int],
                 owner: str) -> list[int]:
    """Expand ``guard -> target`` lines into a total, deterministic row."""
    n = 1 << len(props)
    row: list[int | None] = [None] * n
    else_target = None
    for lineno, text in lines:
        if "->" not in text:
            raise AutomatonFormatError(f"line {lineno}: expected 'guard -> target'")
        guard, _, target = text.rpartition("->")
        guard, target = guard.strip(), target.strip()
        if target not in state_ids:
            raise AutomatonFormatError(f"line {lineno}: unknown state {target!r}")
        t = state_ids[target]
        if guard == "else":
            if else_target is not None:
                raise AutomatonFormatError(f"line {lineno}: second 'else' in state {owner}")
            else_target = t
            continue
        try:
            models = prop_models(parse_ltl(guard, props), props)
        except ValueError as exc:
            raise AutomatonFormatError(f"line {lineno}: {exc}") from None
        for m in models:
            if row[m] is not None:
                raise AutomatonFormatError(f"line {lineno}: guards overlap in state {owner}")
            row[m] = t
    for m in range(n):
        if row[m] is None:
            if else_target is None:
                raise AutomatonFormatError(f"state {owner}: guards are not total")
            row[m] = else_target
    return row  # type: ignore[return-value]


def format_arch(arch: Architecture) -> str:
    return f"arch: {' '.join(arch.env)} ; {' '.join(arch.ctrl)} ; {' '.join(arch.plant)}"


def parse_arch(text: str) -> Architecture:
    parts = text.split(";")
    if len(parts) != 3:
        raise AutomatonFormatError("arch line needs three ';'-separated prop lists")
    env, ctrl, plant = (p.split() for p in parts)
    return Architecture(env, ctrl, plant)


def write_dsa(a: SafetyAutomaton, kind: str = "dsa") -> str:
    names = [f"q{i}" for i in a.states]
    out = [kind, format_arch(a.arch), f"init: {names[a.init]}",
           "safe: " + " ".join(names[q] for q in sorted(a.safe))]
    for q in a.states:
        label = a.labels[q]
        out.append(f"state {names[q]}" + (f"  # {label}" if label != names[q] else ""))
        out.extend(guard_lines(a.trans[q], a.arch.ap, names))
    return "\n".join(out) + "\n"


def _content_lines(text: str) -> list[tuple[int, str]]:
    out = []
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if line.strip():
            out.append((i, line))
    return out


def read_dsa(text: str, kind: str = "dsa") -> SafetyAutomaton:
    lines = _content_lines(text)
    if not lines or lines[0][1].strip() != kind:
        raise AutomatonFormatError(f"expected header line {kind!r}")
    header: dict[str, str] = {}
    i = 1
    while i < len(lines) and not lines[i][1].lstrip().startswith("state "):
        key, sep, value = lines[i][1].partition(":")
        if not sep:
            raise AutomatonFormatError(f"line {lines[i][0]}: expected 'key: value'")
        header[key.strip()] = value.strip()
        i += 1
    for key in ("arch", "init", "safe"):
        if key not in header:
            raise AutomatonFormatError(f"missing '{key}:' line")
    arch = parse_arch(header["arch"])
    blocks: list[tuple[str, list[tuple[int, str]]]] = []
    for lineno, line in lines[i:]:
        if line.lstrip().startswith("state "):
            blocks.append((line.split()[1], []))
        else:
            blocks[-1][1].append((lineno, line.strip()))
    ids = {name: k for k, (name, _) in enumerate(blocks)}
    if len(ids) != len(blocks):
        raise AutomatonFormatError("duplicate state names")
    if header["init"] not in ids:
        raise AutomatonFormatError(f"unknown initial state {header['init']!r}")
    trans = [parse_guards(body, arch.ap, ids, name) for name, body in blocks]
    safe = []
    for name in header["safe"].split():
        if name not in ids:
            raise AutomatonFormatError(f"unknown safe state {name!r}")
        safe.append(ids[name])
    return SafetyAutomaton(arch, tuple(map(tuple, trans)), ids[header["init"]], frozenset(safe),
                           tuple(name for name, _ in blocks))


def dsa_to_dot(a: SafetyAutomaton) -> str:
    out = ["digraph dsa {", "  rankdir=LR;", '  _init [shape=point];']
    for q in a.states:
        shape = "circle" if q in a.safe else "doublecircle"
        label = a.labels[q].replace('"', "'")
        out.append(f'  q{q} [shape={shape}, label="q{q}\\n{label}"];')
    out.append(f"  _init -> q{a.init};")
    names = [f"q{i}" for i in a.states]
    for q in a.states:
        for line in guard_lines(a.trans[q], a.arch.ap, names):
            guard, _, target = line.strip().rpartition(" -> ")
            out.append(f'  q{q} -> {target} [label="{guard}"];')
    out.append("}")
    return "\n".join(out) + "\n"
