"""Random instance generators and brute-force oracles shared by the tests.

The oracles deliberately avoid the package's bitmask encodings: they work
on sets of proposition names through ``step`` so that an encoding bug in
the code under test cannot be mirrored here.
"""
from __future__ import annotations

import itertools
import random

from unisynth.automata import SafetyAutomaton, trim
from unisynth.logic import (FALSE, TRUE, And, Architecture, Atom, Finally, Globally, LassoWord,
                            Next, Not, Or, Release, SafetyFragmentViolation, Until, WeakUntil,
                            all_letters, iff, implies, to_safety_nnf)
from unisynth.machines import MooreMachine

SHAPES = [(1, 1, 1), (0, 1, 2), (1, 1, 0), (1, 2, 0), (2, 1, 0), (0, 2, 1), (1, 1, 1)]


def random_arch(rng: random.Random, shapes=SHAPES) -> Architecture:
    n_env, n_ctrl, n_plant = rng.choice(shapes)
    return Architecture([f"e{i}" for i in range(n_env)], [f"c{i}" for i in range(n_ctrl)],
                        [f"p{i}" for i in range(n_plant)])


def random_formula(rng: random.Random, props, depth: int):
    """Random formula over ``props`` with nesting depth at most ``depth``."""
    if depth == 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.08:
            return rng.choice([TRUE, FALSE])
        a = Atom(rng.choice(props))
        return Not(a) if r < 0.4 else a
    op = rng.choice(["and", "or", "X", "G", "W", "R", "not", "imp", "iff", "F", "U"])
    sub = lambda: random_formula(rng, props, depth - 1)
    if op == "and":
        return And(sub(), sub())
    if op == "or":
        return Or(sub(), sub())
    if op == "X":
        return Next(sub())
    if op == "G":
        return Globally(sub())
    if op == "F":
        return Finally(sub())
    if op == "W":
        return WeakUntil(sub(), sub())
    if op == "U":
        return Until(sub(), sub())
    if op == "R":
        return Release(sub(), sub())
    if op == "imp":
        return implies(sub(), sub())
    if op == "iff":
        return iff(sub(), sub())
    return Not(sub())


def random_safety_formula(rng: random.Random, props, depth: int = 4):
    while True:
        f = random_formula(rng, props, depth)
        try:
            to_safety_nnf(f)
        except SafetyFragmentViolation:
            continue
        return f


def random_lasso(rng: random.Random, props, max_size: int = 4) -> LassoWord:
    letters = list(all_letters(props))
    n_loop = rng.randint(1, max_size)
    n_prefix = rng.randint(0, max_size - n_loop)
    return LassoWord([rng.choice(letters) for _ in range(n_prefix)],
                     [rng.choice(letters) for _ in range(n_loop)])


def random_automaton(rng: random.Random, arch: Architecture, max_states: int = 5) -> SafetyAutomaton:
    k = rng.randint(1, max_states)
    with_sink = k > 1 and rng.random() < 0.8
    safe = set(range(k - 1)) if with_sink else set(range(k))
    trans = []
    for q in range(k):
        if with_sink and q == k - 1:
            trans.append([q] * arch.n_letters)
        else:
            bias = rng.random()
            row = [k - 1 if with_sink and rng.random() < bias * 0.5 else rng.randrange(k)
                   for _ in range(arch.n_letters)]
            trans.append(row)
    return trim(arch, trans, 0, safe)


def random_plant(rng: random.Random, arch: Architecture, max_states: int = 5) -> MooreMachine:
    inputs = list(arch.env + arch.ctrl)
    outputs = list(arch.plant)
    rng.shuffle(inputs)
    rng.shuffle(outputs)
    k = rng.randint(1, max_states)
    trans = tuple(tuple(rng.randrange(k) for _ in range(1 << len(inputs))) for _ in range(k))
    out = tuple(rng.randrange(1 << len(outputs)) for _ in range(k))
    return MooreMachine(tuple(inputs), tuple(outputs), trans, out, 0, role="plant")


# ---------------------------------------------------------------------------
# Oracles


def _valuations(props):
    return [frozenset(c) for r in range(len(props) + 1) for c in itertools.combinations(props, r)]


def safe_prophecy_oracle(a: SafetyAutomaton, plant: MooreMachine) -> dict:
    """All ``(q, frozenset alpha, s) -> bool`` for the safe-prophecy condition.

    Greatest fixpoint over the explicit product: a pair ``(q, s)`` survives
    if it is safe and some controller output keeps every environment
    choice inside the surviving set.
    """
    arch = a.arch
    outs_c = _valuations(arch.ctrl)
    outs_e = _valuations(arch.env)
    pairs = [(q, s) for q in a.states for s in range(plant.n_states)]

    def succ(q, s, alpha, beta):
        letter = plant.output_names(s) | alpha | beta
        return a.step(q, letter), plant.step(s, alpha | beta)

    good = {(q, s) for q, s in pairs if q in a.safe}
    while True:
        nxt = {(q, s) for q, s in good
               if any(all(succ(q, s, al, be) in good for be in outs_e) for al in outs_c)}
        if nxt == good:
            break
        good = nxt
    return {(q, al, s): q in a.safe and all(succ(q, s, al, be) in good for be in outs_e)
            for q, s in pairs for al in outs_c}


def realizable_oracle(a: SafetyAutomaton, plant: MooreMachine) -> bool:
    table = safe_prophecy_oracle(a, plant)
    return any(table[(a.init, al, plant.init)] for al in _valuations(a.arch.ctrl))


def all_controllers(arch: Architecture, max_states: int = 2):
    """Every Moore controller with at most ``max_states`` states, initial state 0."""
    inputs = arch.env + arch.plant
    width = 1 << len(inputs)
    n_out = 1 << arch.n_ctrl
    for k in range(1, max_states + 1):
        for outs in itertools.product(range(n_out), repeat=k):
            for rows in itertools.product(itertools.product(range(k), repeat=width), repeat=k):
                yield MooreMachine(inputs, arch.ctrl, rows, outs, 0, role="controller")


def sample_traces(system: MooreMachine, arch: Architecture, rng: random.Random, count: int,
                  max_size: int = 6):
    """Random lasso traces of ``system`` driven by random free-input lassos."""
    free = [p for p in arch.ap if p not in system.outputs]
    for _ in range(count):
        w = random_lasso(rng, free, max_size)
        # unroll the input lasso until (state, position) repeats
        s, i = system.init, 0
        seen = {}
        letters = []
        while (s, i) not in seen:
            seen[(s, i)] = len(letters)
            inp = w.letter(i)
            letters.append(system.output_names(s) | inp)
            s = system.step(s, inp)
            i = w.successor(i)
        start = seen[(s, i)]
        yield LassoWord(letters[:start], letters[start:])
