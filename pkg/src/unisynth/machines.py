"""Moore machines: process strategies, composition and the ``mm`` file format."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Sequence

from .automata import AutomatonFormatError, _content_lines, guard_lines, parse_guards
from .logic import Architecture, local_mask, local_names, remap_table

ROLES = ("plant", "controller", "environment", "composite")


class MachineFormatError(AutomatonFormatError):
    pass


@dataclass(frozen=True)
class MooreMachine:
    """Deterministic Moore machine.

    Valuations are local bitmasks: bit ``i`` of an input letter is
    ``inputs[i]``, bit ``j`` of an output is ``outputs[j]``.
    ``trans[s][letter]`` is the successor and ``out[s]`` the output of ``s``.
    """

    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    trans: tuple[tuple[int, ...], ...]
    out: tuple[int, ...]
    init: int = 0
    names: tuple[str, ...] = ()
    role: str = "composite"
    parts: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        n = len(self.trans)
        if len(self.names) != n:
            object.__setattr__(self, "names", tuple(f"s{i}" for i in range(n)))
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if set(self.inputs) & set(self.outputs):
            raise ValueError(f"inputs and outputs overlap: {set(self.inputs) & set(self.outputs)}")
        if len(set(self.inputs)) != len(self.inputs) or len(set(self.outputs)) != len(self.outputs):
            raise ValueError("repeated proposition in inputs or outputs")
        if len(self.out) != n:
            raise ValueError("output labelling is not total")
        if not 0 <= self.init < n:
            raise ValueError(f"initial state {self.init} out of range")
        width = 1 << len(self.inputs)
        for s, row in enumerate(self.trans):
            if len(row) != width:
                raise ValueError(f"state {self.names[s]} has {len(row)} edges, expected {width}")
            if any(not 0 <= t < n for t in row):
                raise ValueError(f"state {self.names[s]} has an edge to an unknown state")
        if any(not 0 <= o < 1 << len(self.outputs) for o in self.out):
            raise ValueError("output mask out of range")

    @property
    def n_states(self) -> int:
        return len(self.trans)

    def state_id(self, s: int | str) -> int:
        if isinstance(s, str):
            try:
                return self.names.index(s)
            except ValueError:
                raise KeyError(f"unknown state {s!r}") from None
        if not 0 <= s < self.n_states:
            raise KeyError(f"unknown state {s!r}")
        return s

    def output_names(self, s: int) -> frozenset[str]:
        return local_names(self.out[s], self.outputs)

    def step(self, s: int, true_inputs: Iterable[str]) -> int:
        """Successor of ``s`` when exactly ``true_inputs`` hold (others ignored)."""
        names = {p for p in true_inputs if p in self.inputs}
        return self.trans[s][local_mask(names, self.inputs)]

    def run(self, letters: Iterable[Iterable[str]], start: int | None = None) -> list[frozenset[str]]:
        """Output sequence ``o(s0) o(s1) ... o(sk)`` for ``k`` input letters."""
        s = self.init if start is None else start
        outs = [self.output_names(s)]
        for letter in letters:
            s = self.step(s, letter)
            outs.append(self.output_names(s))
        return outs

    def reachable(self, start: int | None = None) -> list[int]:
        start = self.init if start is None else start
        order = [start]
        seen = {start}
        i = 0
        while i < len(order):
            for t in self.trans[order[i]]:
                if t not in seen:
                    seen.add(t)
                    order.append(t)
            i += 1
        return order


def explore(inputs: Sequence[str], outputs: Sequence[str], init: Hashable,
            successor: Callable[[Hashable, int], Hashable], output: Callable[[Hashable], int],
            role: str = "composite", name: Callable[[Hashable], str] = str) -> MooreMachine:
    """Build the reachable part of a machine given by functions on state keys."""
    return _explore(inputs, outputs, init, successor, output, role, name)[0]


def _explore(inputs, outputs, init, successor, output, role="composite", name=str):
    width = 1 << len(inputs)
    index = {init: 0}
    keys = [init]
    trans = []
    i = 0
    while i < len(keys):
        k = keys[i]
        row = []
        for letter in range(width):
            t = successor(k, letter)
            j = index.get(t)
            if j is None:
                j = index[t] = len(keys)
                keys.append(t)
            row.append(j)
        trans.append(tuple(row))
        i += 1
    m = MooreMachine(tuple(inputs), tuple(outputs), tuple(trans),
                     tuple(output(k) for k in keys), 0, tuple(name(k) for k in keys), role)
    return m, keys


def check_role(m: MooreMachine, arch: Architecture) -> None:
    """Raise if a plant/controller machine does not match the architecture."""
    if m.role not in ("plant", "controller"):
        return
    want_in, want_out = set(arch.inputs(m.role)), set(arch.outputs(m.role))
    if set(m.inputs) != want_in or set(m.outputs) != want_out:
        raise ValueError(
            f"{m.role} signature {sorted(m.inputs)} -> {sorted(m.outputs)} does not match "
            f"architecture {sorted(want_in)} -> {sorted(want_out)}"
        )


def parallel(m1: MooreMachine, m2: MooreMachine) -> MooreMachine:
    """Synchronous product; each side reads the other's current output."""
    if set(m1.outputs) & set(m2.outputs):
        raise ValueError(f"machines share outputs {sorted(set(m1.outputs) & set(m2.outputs))}")
    outputs = m1.outputs + m2.outputs
    produced = set(outputs)
    inputs: list[str] = []
    for p in m1.inputs + m2.inputs:
        if p not in produced and p not in inputs:
            inputs.append(p)
    in1 = remap_table(inputs, m1.inputs)
    in1_o2 = remap_table(m2.outputs, m1.inputs)
    in2 = remap_table(inputs, m2.inputs)
    in2_o1 = remap_table(m1.outputs, m2.inputs)
    shift = len(m1.outputs)

    def successor(k, letter):
        s1, s2 = k
        return (m1.trans[s1][in1[letter] | in1_o2[m2.out[s2]]],
                m2.trans[s2][in2[letter] | in2_o1[m1.out[s1]]])

    m, keys = _explore(inputs, outputs, (m1.init, m2.init), successor,
                       lambda k: m1.out[k[0]] | m2.out[k[1]] << shift,
                       name=lambda k: f"{m1.names[k[0]]}|{m2.names[k[1]]}")
    return MooreMachine(m.inputs, m.outputs, m.trans, m.out, 0, m.names, "composite", tuple(keys))


def reroot(m: MooreMachine, s: int | str) -> MooreMachine:
    """The same strategy started in ``s``, restricted to states reachable from it."""
    start = m.state_id(s)
    order = m.reachable(start)
    index = {old: new for new, old in enumerate(order)}
    trans = tuple(tuple(index[t] for t in m.trans[old]) for old in order)
    return MooreMachine(m.inputs, m.outputs, trans, tuple(m.out[old] for old in order), 0,
                        tuple(m.names[old] for old in order), m.role)


def bisimilar(m1: MooreMachine, m2: MooreMachine) -> bool:
    """Bisimilarity of initial states (outputs compared by name, inputs by name)."""
    if set(m1.inputs) != set(m2.inputs) or set(m1.outputs) != set(m2.outputs):
        return False
    in2 = remap_table(m1.inputs, m2.inputs)
    out2 = remap_table(m2.outputs, m1.outputs)
    width = 1 << len(m1.inputs)
    n1 = m1.n_states
    succ = [list(row) for row in m1.trans] + [
        [n1 + row[in2[letter]] for letter in range(width)] for row in m2.trans
    ]
    label = list(m1.out) + [out2[o] for o in m2.out]
    block = _refine(succ, label)
    return block[m1.init] == block[n1 + m2.init]


def _refine(succ: list[list[int]], label: list[int]) -> list[int]:
    ids: dict = {}
    block = [ids.setdefault(x, len(ids)) for x in label]
    while True:
        ids = {}
        new = [ids.setdefault((block[v], tuple(block[t] for t in succ[v])), len(ids))
               for v in range(len(succ))]
        if len(ids) == len(set(block)):
            return new
        block = new


def minimize(m: MooreMachine) -> MooreMachine:
    """Quotient by bisimulation (reachable part only)."""
    m = reroot(m, m.init)
    block = _refine([list(r) for r in m.trans], list(m.out))
    rep: dict[int, int] = {}
    for s in range(m.n_states):
        rep.setdefault(block[s], s)
    return explore(m.inputs, m.outputs, block[m.init],
                   lambda b, letter: block[m.trans[rep[b]][letter]],
                   lambda b: m.out[rep[b]], m.role, name=lambda b: m.names[rep[b]])


# ---------------------------------------------------------------------------
# File format


def write_mm(m: MooreMachine) -> str:
    names = list(m.names)
    lines = [f"mm role={m.role}", "inputs: " + " ".join(m.inputs),
             "outputs: " + " ".join(m.outputs), f"init: {names[m.init]}"]
    for s in range(m.n_states):
        outs = " ".join(p for p in m.outputs if p in m.output_names(s))
        lines.append(f"state {names[s]} {{{outs}}}")
        lines.extend(guard_lines(m.trans[s], m.inputs, names))
    return "\n".join(lines) + "\n"


def read_mm(text: str) -> MooreMachine:
    lines = _content_lines(text)
    if not lines:
        raise MachineFormatError("empty machine file")
    head = lines[0][1].split()
    if not head or head[0] != "mm":
        raise MachineFormatError("expected header 'mm role=...'")
    role = "composite"
    for item in head[1:]:
        key, _, value = item.partition("=")
        if key != "role":
            raise MachineFormatError(f"unknown header attribute {key!r}")
        role = value
    header: dict[str, str] = {}
    i = 1
    while i < len(lines) and not lines[i][1].lstrip().startswith("state "):
        key, sep, value = lines[i][1].partition(":")
        if not sep:
            raise MachineFormatError(f"line {lines[i][0]}: expected 'key: value'")
        header[key.strip()] = value.strip()
        i += 1
    for key in ("inputs", "outputs", "init"):
        if key not in header:
            raise MachineFormatError(f"missing '{key}:' line")
    inputs = tuple(header["inputs"].split())
    outputs = tuple(header["outputs"].split())
    blocks: list[tuple[str, frozenset[str], list]] = []
    for lineno, line in lines[i:]:
        stripped = line.strip()
        if stripped.startswith("state "):
            rest = stripped[len("state "):]
            name, brace, tail = rest.partition("{")
            if not brace or not tail.endswith("}"):
                raise MachineFormatError(f"line {lineno}: expected 'state NAME {{outputs}}'")
            outs = frozenset(tail[:-1].replace(",", " ").split())
            unknown = outs - set(outputs)
            if unknown:
                raise MachineFormatError(f"line {lineno}: unknown outputs {sorted(unknown)}")
            blocks.append((name.strip(), outs, []))
        else:
            blocks[-1][2].append((lineno, stripped))
    if not blocks:
        raise MachineFormatError("machine has no states")
    ids = {name: k for k, (name, _, _) in enumerate(blocks)}
    if len(ids) != len(blocks):
        raise MachineFormatError("duplicate state names")
    if header["init"] not in ids:
        raise MachineFormatError(f"unknown initial state {header['init']!r}")
    try:
        trans = tuple(tuple(parse_guards(body, inputs, ids, name)) for name, _, body in blocks)
    except AutomatonFormatError as exc:
        raise MachineFormatError(str(exc)) from None
    out = tuple(local_mask(o, outputs) for _, o, _ in blocks)
    try:
        return MooreMachine(inputs, outputs, trans, out, ids[header["init"]],
                            tuple(name for name, _, _ in blocks), role)
    except ValueError as exc:
        raise MachineFormatError(str(exc)) from None


def machine_to_dot(m: MooreMachine) -> str:
    out = ["digraph mm {", "  rankdir=LR;", "  _init [shape=point];"]
    for s in range(m.n_states):
        outs = ",".join(sorted(m.output_names(s)))
        out.append(f'  n{s} [shape=box, label="{m.names[s]}\\n{{{outs}}}"];')
    out.append(f"  _init -> n{m.init};")
    names = [f"n{s}" for s in range(m.n_states)]
    for s in range(m.n_states):
        for line in guard_lines(m.trans[s], m.inputs, names):
            guard, _, target = line.strip().rpartition(" -> ")
            out.append(f'  n{s} -> {target} [label="{guard}"];')
    out.append("}")
    return "\n".join(out) + "\n"
