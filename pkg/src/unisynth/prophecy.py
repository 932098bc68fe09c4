"""Safe prophecies as tree automata over plant strategies.

A prophecy for ``(q, alpha)`` is never materialised. It is the triple
``(base automaton, anchor state, anchor output)`` and its transitions are
derived from the base automaton on demand, so all prophecies of one
specification share a single copy of the underlying automaton.

The implied tree automaton reads trees labelled with plant outputs and
branching over plant inputs (controller and environment outputs). Its
states are the base states plus a fresh initial state and an accepting
sink.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .automata import SafetyAutomaton

INITIAL = "q0'"
SINK = "sink"

TreeState = Union[int, str]


@dataclass(frozen=True)
class ProphecyAutomaton:
    base: SafetyAutomaton
    anchor_state: int
    anchor_output: int  # mask over arch.ctrl

    def __post_init__(self):
        if self.anchor_state not in self.base.states:
            raise KeyError(f"unknown automaton state {self.anchor_state}")
        if not 0 <= self.anchor_output < 1 << self.base.arch.n_ctrl:
            raise ValueError(f"controller output {self.anchor_output} out of range")

    @property
    def states(self) -> list[TreeState]:
        return [INITIAL, *self.base.states, SINK]

    @property
    def n_states(self) -> int:
        return self.base.n_states + 2

    def is_safe(self, state: TreeState) -> bool:
        return state in (INITIAL, SINK) or state in self.base.safe

    def describe(self) -> str:
        arch = self.base.arch
        alpha = sorted(n for i, n in enumerate(arch.ctrl) if self.anchor_output >> i & 1)
        return f"prophecy(q{self.anchor_state}, {{{','.join(alpha)}}})"


def prophecy(q: int, alpha: int, a: SafetyAutomaton) -> ProphecyAutomaton:
    """The tree automaton accepting the plants for which output ``alpha`` is safe at ``q``."""
    return ProphecyAutomaton(a, q, alpha)


def expand_transitions(p: ProphecyAutomaton, state: TreeState,
                       plant_label: int) -> list[tuple[int, tuple[TreeState, ...]]]:
    """Transitions of the implied tree automaton for one plant label.

    Returns one ``(controller output, branch)`` pair per transition. ``branch``
    is indexed by plant inputs ``beta`` encoded as the low
    ``n_env + n_ctrl`` bits of a letter (environment bits first).
    ``plant_label`` is a mask over ``arch.plant``.
    """
    arch = p.base.arch
    n_in = arch.n_env + arch.n_ctrl
    shifted = plant_label << n_in
    ctrl_of = [beta >> arch.n_env for beta in range(1 << n_in)]
    if state == SINK:
        return [(c, (SINK,) * (1 << n_in)) for c in range(1 << arch.n_ctrl)]
    if state == INITIAL:
        source, choices = p.anchor_state, [p.anchor_output]
    elif state in p.base.states:
        source, choices = state, range(1 << arch.n_ctrl)
    else:
        raise KeyError(f"unknown tree-automaton state {state!r}")
    row = p.base.trans[source]
    out = []
    for c in choices:
        branch = tuple(row[beta | shifted] if ctrl_of[beta] == c else SINK
                       for beta in range(1 << n_in))
        out.append((c, branch))
    return out
