"""LTL formulas over a three-process architecture.

Holds the architecture (the split of atomic propositions into environment,
controller and plant outputs), the formula AST with a parser and printer,
negation normal form with the syntactic safety check, and a positional
evaluator on lasso words that serves as ground truth for the automata code.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Iterator, Sequence


class LtlError(ValueError):
    """Base class for formula errors."""


class LtlSyntaxError(LtlError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


class UnknownProposition(LtlError):
    def __init__(self, name: str, pos: int | None = None):
        where = "" if pos is None else f" at position {pos}"
        super().__init__(f"unknown proposition {name!r}{where}")
        self.name = name
        self.pos = pos


class SafetyFragmentViolation(LtlError):
    """Raised when a formula's NNF still contains U or F."""


# ---------------------------------------------------------------------------
# Architecture and valuations


@dataclass(frozen=True)
class Architecture:
    """Partition of the atomic propositions into process outputs.

    Letters over the whole alphabet are encoded as ints: bit ``i`` stands for
    ``ap[i]`` with ``ap = env + ctrl + plant``.
    """

    env: tuple[str, ...]
    ctrl: tuple[str, ...]
    plant: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __init__(self, env: Iterable[str] = (), ctrl: Iterable[str] = (), plant: Iterable[str] = ()):
        object.__setattr__(self, "env", tuple(env))
        object.__setattr__(self, "ctrl", tuple(ctrl))
        object.__setattr__(self, "plant", tuple(plant))
        ap = self.env + self.ctrl + self.plant
        if not ap:
            raise ValueError("architecture has no propositions")
        if len(set(ap)) != len(ap):
            raise ValueError(f"output sets overlap or repeat a name: {ap}")
        object.__setattr__(self, "_index", {name: i for i, name in enumerate(ap)})

    @property
    def ap(self) -> tuple[str, ...]:
        return self.env + self.ctrl + self.plant

    @property
    def n_env(self) -> int:
        return len(self.env)

    @property
    def n_ctrl(self) -> int:
        return len(self.ctrl)

    @property
    def n_plant(self) -> int:
        return len(self.plant)

    @property
    def n_letters(self) -> int:
        return 1 << len(self._index)

    def outputs(self, role: str) -> tuple[str, ...]:
        return {"environment": self.env, "controller": self.ctrl, "plant": self.plant}[role]

    def inputs(self, role: str) -> tuple[str, ...]:
        """Inputs of a process: the outputs of the other two."""
        return {
            "environment": self.ctrl + self.plant,
            "controller": self.env + self.plant,
            "plant": self.ctrl + self.env,
        }[role]

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def bit(self, name: str) -> int:
        try:
            return 1 << self._index[name]
        except KeyError:
            raise UnknownProposition(name) from None

    def mask(self, names: Iterable[str]) -> int:
        m = 0
        for name in names:
            m |= self.bit(name)
        return m

    def names(self, mask: int) -> frozenset[str]:
        return frozenset(name for i, name in enumerate(self.ap) if mask >> i & 1)

    def letter(self, env: int = 0, ctrl: int = 0, plant: int = 0) -> int:
        """Assemble a letter from the three local output masks."""
        return env | ctrl << self.n_env | plant << (self.n_env + self.n_ctrl)

    def split(self, letter: int) -> tuple[int, int, int]:
        ne, nc = self.n_env, self.n_ctrl
        return (
            letter & ((1 << ne) - 1),
            letter >> ne & ((1 << nc) - 1),
            letter >> (ne + nc),
        )


def remap_table(src: Sequence[str], dst: Sequence[str]) -> list[int]:
    """Table sending each valuation over ``src`` to its restriction onto ``dst``.

    Names of ``src`` absent from ``dst`` are dropped. The table has
    ``2**len(src)`` entries.
    """
    pos = {name: j for j, name in enumerate(dst)}
    moves = [(i, pos[name]) for i, name in enumerate(src) if name in pos]
    table = [0] * (1 << len(src))
    for m in range(len(table)):
        out = 0
        for i, j in moves:
            if m >> i & 1:
                out |= 1 << j
        table[m] = out
    return table


def local_mask(names: Iterable[str], props: Sequence[str]) -> int:
    pos = {name: i for i, name in enumerate(props)}
    m = 0
    for name in names:
        if name not in pos:
            raise UnknownProposition(name)
        m |= 1 << pos[name]
    return m


def local_names(mask: int, props: Sequence[str]) -> frozenset[str]:
    return frozenset(name for i, name in enumerate(props) if mask >> i & 1)


# ---------------------------------------------------------------------------
# Formula AST


class LtlFormula:
    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, eq=True)
class TrueConst(LtlFormula):
    pass


@dataclass(frozen=True, eq=True)
class FalseConst(LtlFormula):
    pass


TRUE = TrueConst()
FALSE = FalseConst()


@dataclass(frozen=True)
class Atom(LtlFormula):
    name: str


@dataclass(frozen=True)
class Not(LtlFormula):
    operand: LtlFormula


@dataclass(frozen=True)
class And(LtlFormula):
    left: LtlFormula
    right: LtlFormula


@dataclass(frozen=True)
class Or(LtlFormula):
    left: LtlFormula
    right: LtlFormula


@dataclass(frozen=True)
class Next(LtlFormula):
    operand: LtlFormula


@dataclass(frozen=True)
class Globally(LtlFormula):
    operand: LtlFormula


@dataclass(frozen=True)
class Finally(LtlFormula):
    operand: LtlFormula


@dataclass(frozen=True)
class WeakUntil(LtlFormula):
    left: LtlFormula
    right: LtlFormula


@dataclass(frozen=True)
class Until(LtlFormula):
    left: LtlFormula
    right: LtlFormula


@dataclass(frozen=True)
class Release(LtlFormula):
    left: LtlFormula
    right: LtlFormula


UNARY = {Not: "!", Next: "X", Globally: "G", Finally: "F"}
BINARY = {And: "&", Or: "|", WeakUntil: "W", Until: "U", Release: "R"}


def conj(*parts: LtlFormula) -> LtlFormula:
    """Right-nested conjunction; ``TRUE`` when empty."""
    if not parts:
        return TRUE
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = And(p, out)
    return out


def disj(*parts: LtlFormula) -> LtlFormula:
    if not parts:
        return FALSE
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Or(p, out)
    return out


def implies(a: LtlFormula, b: LtlFormula) -> LtlFormula:
    return Or(Not(a), b)


def iff(a: LtlFormula, b: LtlFormula) -> LtlFormula:
    return Or(And(a, b), And(Not(a), Not(b)))


def atoms(f: LtlFormula) -> set[str]:
    out: set[str] = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Atom):
            out.add(g.name)
        elif type(g) in UNARY:
            stack.append(g.operand)
        elif type(g) in BINARY:
            stack.append(g.left)
            stack.append(g.right)
    return out


def subformulas(f: LtlFormula) -> Iterator[LtlFormula]:
    yield f
    if type(f) in UNARY:
        yield from subformulas(f.operand)
    elif type(f) in BINARY:
        yield from subformulas(f.left)
        yield from subformulas(f.right)


def depth(f: LtlFormula) -> int:
    if type(f) in UNARY:
        return 1 + depth(f.operand)
    if type(f) in BINARY:
        return 1 + max(depth(f.left), depth(f.right))
    return 0


def to_text(f: LtlFormula) -> str:
    """Print in the concrete syntax; the output parses back to ``f``."""
    if isinstance(f, TrueConst):
        return "true"
    if isinstance(f, FalseConst):
        return "false"
    if isinstance(f, Atom):
        return f.name
    op = UNARY.get(type(f))
    if op is not None:
        inner = to_text(f.operand)
        if type(f.operand) in BINARY:
            inner = f"({inner})"
        return f"{op}{inner}" if op == "!" else f"{op} {inner}"
    op = BINARY.get(type(f))
    if op is not None:
        return f"{_wrap(f.left)} {op} {_wrap(f.right)}"
    raise TypeError(f"not a formula: {f!r}")


def _wrap(f: LtlFormula) -> str:
    s = to_text(f)
    return f"({s})" if type(f) in BINARY else s


# ---------------------------------------------------------------------------
# Parser

_TOKEN = re.compile(r"\s*(?:(<->|->|[!&|()])|([A-Za-z_][A-Za-z0-9_]*))")
_KEYWORDS = {"X", "G", "F", "U", "W", "R", "true", "false"}


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise LtlSyntaxError(f"unexpected character {text[pos]!r}", pos)
        tokens.append((m.group(1) or m.group(2), m.start(1) if m.group(1) else m.start(2)))
        pos = m.end()
    tokens.append(("<eof>", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, known: set[str] | None):
        self.tokens = _tokenize(text)
        self.i = 0
        self.known = known

    def peek(self) -> str:
        return self.tokens[self.i][0]

    def take(self) -> tuple[str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, tok: str) -> None:
        got, pos = self.take()
        if got != tok:
            raise LtlSyntaxError(f"expected {tok!r}, got {got!r}", pos)

    def parse(self) -> LtlFormula:
        f = self.iff()
        tok, pos = self.take()
        if tok != "<eof>":
            raise LtlSyntaxError(f"unexpected token {tok!r}", pos)
        return f

    def iff(self) -> LtlFormula:
        left = self.imp()
        while self.peek() == "<->":
            self.take()
            left = iff(left, self.imp())
        return left

    def imp(self) -> LtlFormula:
        left = self.temporal()
        if self.peek() == "->":
            self.take()
            return implies(left, self.imp())
        return left

    def temporal(self) -> LtlFormula:
        left = self.disjunction()
        tok = self.peek()
        if tok in ("U", "W", "R"):
            self.take()
            right = self.temporal()
            return {"U": Until, "W": WeakUntil, "R": Release}[tok](left, right)
        return left

    def disjunction(self) -> LtlFormula:
        left = self.conjunction()
        while self.peek() == "|":
            self.take()
            left = Or(left, self.conjunction())
        return left

    def conjunction(self) -> LtlFormula:
        left = self.unary()
        while self.peek() == "&":
            self.take()
            left = And(left, self.unary())
        return left

    def unary(self) -> LtlFormula:
        tok, pos = self.take()
        if tok == "!":
            return Not(self.unary())
        if tok in ("X", "G", "F"):
            return {"X": Next, "G": Globally, "F": Finally}[tok](self.unary())
        if tok == "(":
            f = self.iff()
            self.expect(")")
            return f
        if tok == "true":
            return TRUE
        if tok == "false":
            return FALSE
        if tok in ("U", "W", "R", "<eof>", ")", "&", "|", "->", "<->"):
            raise LtlSyntaxError(f"unexpected token {tok!r}", pos)
        if self.known is not None and tok not in self.known:
            # "XX p" written without a space
            if set(tok) <= {"X", "G", "F"}:
                inner = self.unary()
                for ch in reversed(tok):
                    inner = {"X": Next, "G": Globally, "F": Finally}[ch](inner)
                return inner
            raise UnknownProposition(tok, pos)
        return Atom(tok)


def parse_ltl(text: str, arch: Architecture | Iterable[str] | None = None) -> LtlFormula:
    """Parse a formula; with ``arch`` given every atom must belong to it.

    Precedence from tightest: unary (``! X G F``), ``&``, ``|``, the binary
    temporal operators ``U W R`` (right-associative), ``->`` (right-assoc.),
    ``<->``. Implication and equivalence are expanded away.
    """
    if arch is None:
        known = None
    elif isinstance(arch, Architecture):
        known = set(arch.ap)
    else:
        known = set(arch)
    if known is not None and known & _KEYWORDS:
        raise LtlError(f"proposition names clash with keywords: {sorted(known & _KEYWORDS)}")
    return _Parser(text, known).parse()


# ---------------------------------------------------------------------------
# Negation normal form


def to_nnf(f: LtlFormula) -> LtlFormula:
    """Push negations to the atoms. Keeps G and F as primitive operators."""
    if isinstance(f, (TrueConst, FalseConst, Atom)):
        return f
    if isinstance(f, Not):
        return _negate(f.operand)
    if type(f) in UNARY:
        return type(f)(to_nnf(f.operand))
    return type(f)(to_nnf(f.left), to_nnf(f.right))


def _negate(f: LtlFormula) -> LtlFormula:
    if isinstance(f, TrueConst):
        return FALSE
    if isinstance(f, FalseConst):
        return TRUE
    if isinstance(f, Atom):
        return Not(f)
    if isinstance(f, Not):
        return to_nnf(f.operand)
    if isinstance(f, And):
        return Or(_negate(f.left), _negate(f.right))
    if isinstance(f, Or):
        return And(_negate(f.left), _negate(f.right))
    if isinstance(f, Next):
        return Next(_negate(f.operand))
    if isinstance(f, Globally):
        return Finally(_negate(f.operand))
    if isinstance(f, Finally):
        return Globally(_negate(f.operand))
    if isinstance(f, Until):
        return Release(_negate(f.left), _negate(f.right))
    if isinstance(f, Release):
        return Until(_negate(f.left), _negate(f.right))
    if isinstance(f, WeakUntil):
        nb = _negate(f.right)
        return Until(nb, And(_negate(f.left), nb))
    raise TypeError(f"not a formula: {f!r}")


def is_safety_nnf(f: LtlFormula) -> bool:
    for g in subformulas(f):
        if isinstance(g, (Until, Finally)):
            return False
        if isinstance(g, Not) and not isinstance(g.operand, Atom):
            return False
    return True


def to_safety_nnf(f: LtlFormula) -> LtlFormula:
    g = to_nnf(f)
    if not is_safety_nnf(g):
        raise SafetyFragmentViolation(f"not in the safety fragment (U or F after NNF): {g}")
    return g


# ---------------------------------------------------------------------------
# Propositional helpers (guards in file formats)


def eval_prop(f: LtlFormula, true_names: frozenset[str] | set[str]) -> bool:
    """Evaluate a formula without temporal operators on one letter."""
    if isinstance(f, TrueConst):
        return True
    if isinstance(f, FalseConst):
        return False
    if isinstance(f, Atom):
        return f.name in true_names
    if isinstance(f, Not):
        return not eval_prop(f.operand, true_names)
    if isinstance(f, And):
        return eval_prop(f.left, true_names) and eval_prop(f.right, true_names)
    if isinstance(f, Or):
        return eval_prop(f.left, true_names) or eval_prop(f.right, true_names)
    raise LtlError(f"temporal operator in a propositional guard: {f}")


def prop_models(f: LtlFormula, props: Sequence[str]) -> set[int]:
    """All local masks over ``props`` satisfying the propositional ``f``."""
    return {m for m in range(1 << len(props)) if eval_prop(f, local_names(m, props))}


def letters_to_formula(letters: Iterable[int], props: Sequence[str]) -> LtlFormula:
    """A small DNF over ``props`` whose models are exactly ``letters``.

    Prime implicants by iterated cube merging, then a greedy cover.
    """
    letters = set(letters)
    n = len(props)
    full = (1 << n) - 1
    if not letters:
        return FALSE
    if len(letters) == 1 << n:
        return TRUE
    # a cube is (care, value): bits in care are fixed to value
    cubes = {(full, m) for m in letters}
    primes = set()
    while cubes:
        merged = set()
        used = set()
        by_care: dict[int, list[int]] = {}
        for care, value in cubes:
            by_care.setdefault(care, []).append(value)
        for care, values in by_care.items():
            vs = set(values)
            for v in values:
                for i in range(n):
                    b = 1 << i
                    if care & b and not v & b and (v | b) in vs:
                        merged.add((care & ~b, v))
                        used.add((care, v))
                        used.add((care, v | b))
        primes |= cubes - used
        cubes = merged

    def covers(cube: tuple[int, int]) -> set[int]:
        care, value = cube
        return {m for m in letters if m & care == value}

    todo = set(letters)
    chosen = []
    ranked = sorted(primes, key=lambda c: (bin(c[0]).count("1"), c[0], c[1]))
    while todo:
        best = max(ranked, key=lambda c: len(covers(c) & todo))
        chosen.append(best)
        todo -= covers(best)
    terms = []
    for care, value in sorted(chosen, key=lambda c: (c[0], c[1])):
        lits = [
            Atom(props[i]) if value >> i & 1 else Not(Atom(props[i]))
            for i in range(n)
            if care >> i & 1
        ]
        terms.append(conj(*lits))
    return disj(*terms)


# ---------------------------------------------------------------------------
# Lasso words and the positional evaluator


@dataclass(frozen=True)
class LassoWord:
    """The infinite word ``prefix . loop^omega``; letters are sets of true names."""

    prefix: tuple[frozenset[str], ...]
    loop: tuple[frozenset[str], ...]

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(frozenset(x) for x in self.prefix))
        object.__setattr__(self, "loop", tuple(frozenset(x) for x in self.loop))
        if not self.loop:
            raise ValueError("lasso loop must be nonempty")

    def __len__(self) -> int:
        return len(self.prefix) + len(self.loop)

    def letter(self, i: int) -> frozenset[str]:
        if i < len(self.prefix):
            return self.prefix[i]
        return self.loop[(i - len(self.prefix)) % len(self.loop)]

    def positions(self) -> list[frozenset[str]]:
        return list(self.prefix) + list(self.loop)

    def successor(self, i: int) -> int:
        return i + 1 if i + 1 < len(self) else len(self.prefix)

    def __str__(self) -> str:
        def fmt(letter):
            return "{" + ",".join(sorted(letter)) + "}"

        pre = " ".join(fmt(x) for x in self.prefix)
        loop = " ".join(fmt(x) for x in self.loop)
        return f"{pre} ({loop})^w".strip()


def eval_lasso(f: LtlFormula, w: LassoWord) -> bool:
    """Decide ``prefix . loop^omega |= f``.

    Works on full LTL (negation anywhere). Each subformula gets a truth vector
    over the ``|prefix| + |loop|`` positions; the last position's successor is
    the loop start. W, G, R are greatest and U, F least fixpoints of their
    one-step unfoldings, iterated to stability.
    """
    return _vector(f, w, {})[0]


def _vector(f: LtlFormula, w: LassoWord, memo: dict) -> list[bool]:
    if f in memo:
        return memo[f]
    n = len(w)
    succ = [w.successor(i) for i in range(n)]
    if isinstance(f, TrueConst):
        v = [True] * n
    elif isinstance(f, FalseConst):
        v = [False] * n
    elif isinstance(f, Atom):
        v = [f.name in w.letter(i) for i in range(n)]
    elif isinstance(f, Not):
        v = [not x for x in _vector(f.operand, w, memo)]
    elif isinstance(f, And):
        a, b = _vector(f.left, w, memo), _vector(f.right, w, memo)
        v = [x and y for x, y in zip(a, b)]
    elif isinstance(f, Or):
        a, b = _vector(f.left, w, memo), _vector(f.right, w, memo)
        v = [x or y for x, y in zip(a, b)]
    elif isinstance(f, Next):
        a = _vector(f.operand, w, memo)
        v = [a[succ[i]] for i in range(n)]
    else:
        if isinstance(f, Globally):
            a, b, greatest = _vector(f.operand, w, memo), [False] * n, True
            step = lambda i, v: a[i] and v[succ[i]]  # noqa: E731
        elif isinstance(f, Finally):
            a, greatest = _vector(f.operand, w, memo), False
            step = lambda i, v: a[i] or v[succ[i]]  # noqa: E731
        else:
            a, b = _vector(f.left, w, memo), _vector(f.right, w, memo)
            if isinstance(f, WeakUntil):
                greatest = True
                step = lambda i, v: b[i] or (a[i] and v[succ[i]])  # noqa: E731
            elif isinstance(f, Until):
                greatest = False
                step = lambda i, v: b[i] or (a[i] and v[succ[i]])  # noqa: E731
            elif isinstance(f, Release):
                greatest = True
                step = lambda i, v: b[i] and (a[i] or v[succ[i]])  # noqa: E731
            else:
                raise TypeError(f"not a formula: {f!r}")
        v = [greatest] * n
        while True:
            nv = [step(i, v) for i in range(n)]
            if nv == v:
                break
            v = nv
    memo[f] = v
    return v


def all_letters(props: Sequence[str]) -> Iterator[frozenset[str]]:
    for bits in product((False, True), repeat=len(props)):
        yield frozenset(p for p, b in zip(props, bits) if b)
