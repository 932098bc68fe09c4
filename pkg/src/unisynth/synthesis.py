"""Universal controllers and their on-the-fly adaptation to a plant."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .automata import SafetyAutomaton, ltl_to_dsa, product_reach, read_dsa, write_dsa
from .logic import Architecture, LtlFormula, remap_table
from .machines import MooreMachine, check_role, explore, parallel
from .membership import MembershipCache, is_member
from .prophecy import ProphecyAutomaton, prophecy


class Unrealizable(Exception):
    """No controller makes the specification hold on this plant."""

    def __init__(self, message: str = "unrealizable", stats: dict | None = None):
        super().__init__(message)
        self.stats = stats or {}


class InternalInvariantError(AssertionError):
    pass


@dataclass(frozen=True)
class UniversalController:
    skeleton: SafetyAutomaton
    _kappa: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def arch(self) -> Architecture:
        return self.skeleton.arch

    @property
    def n_states(self) -> int:
        return self.skeleton.n_states

    def kappa(self, q: int, alpha: int) -> ProphecyAutomaton:
        p = self._kappa.get((q, alpha))
        if p is None:
            p = self._kappa[(q, alpha)] = prophecy(q, alpha, self.skeleton)
        return p


def universal_controller(f: LtlFormula, arch: Architecture, **dsa_options) -> UniversalController:
    """Specification automaton annotated with safe prophecies.

    The annotation is implicit: ``kappa(q, alpha)`` only records its anchor.
    """
    return UniversalController(ltl_to_dsa(f, arch, **dsa_options))


def write_uc(u: UniversalController) -> str:
    return write_dsa(u.skeleton, kind="uc")


def read_uc(text: str) -> UniversalController:
    return UniversalController(read_dsa(text, kind="uc"))


def _plant_tables(u: UniversalController, plant: MooreMachine):
    arch = u.arch
    check_role(plant, arch)
    n_in = arch.n_env + arch.n_ctrl
    beta_to_input = remap_table(arch.env + arch.ctrl, plant.inputs)
    out_to_label = remap_table(plant.outputs, arch.plant)
    return n_in, beta_to_input, out_to_label


def step_composition(q_c: int, q_p: int, u: UniversalController, plant: MooreMachine,
                     explored: set | None = None, order: str = "min") -> list[tuple[int, tuple[int, int]]]:
    """Candidate edges ``(letter, (q_c', q_p'))`` out of a composition state.

    Letters range over all controller and environment outputs with the
    plant output fixed by ``q_p``. They are grouped by environment output
    in ascending order; within a group, targets already in ``explored``
    come first, then controller outputs in ``order``.
    """
    arch = u.arch
    n_in, beta_to_input, out_to_label = _plant_tables(u, plant)
    label = out_to_label[plant.out[q_p]] << n_in
    row_a = u.skeleton.trans[q_c]
    row_p = plant.trans[q_p]
    ctrl = list(range(1 << arch.n_ctrl))
    if order == "max":
        ctrl.reverse()
    edges = []
    for e in range(1 << arch.n_env):
        group = []
        for c in ctrl:
            beta = e | c << arch.n_env
            group.append((beta | label, (row_a[beta | label], row_p[beta_to_input[beta]])))
        if explored is not None:
            group.sort(key=lambda edge: edge[1] not in explored)
        edges.extend(group)
    return edges


@dataclass
class Composition:
    """Explored part of the universal controller composed with a plant.

    ``choices[state]`` lists the controller outputs whose prophecy the plant
    (rerooted at the state's plant component) satisfies, in the order they
    were checked. ``edges`` holds every kept edge.
    """

    u: UniversalController
    plant: MooreMachine
    init: tuple[int, int]
    states: list[tuple[int, int]]
    edges: list[tuple[tuple[int, int], int, tuple[int, int]]]
    choices: dict[tuple[int, int], list[int]]
    stats: dict[str, int]


def compose(u: UniversalController, plant: MooreMachine, *, heuristics: bool = True,
            order: str = "min", cache: MembershipCache | None = None,
            terminal_shortcut: bool = False) -> Composition:
    """On-the-fly composition of ``u`` with ``plant``.

    Each state keeps the controller outputs whose prophecy the rerooted
    plant satisfies. With ``heuristics`` the search stops at the first
    passing output (every environment output is then covered) and prefers
    outputs leading to explored states. Raises :class:`Unrealizable` when
    the initial state has no passing output.
    """
    if order not in ("min", "max"):
        raise ValueError(f"unknown order {order!r}")
    arch = u.arch
    _plant_tables(u, plant)
    if cache is None:
        cache = MembershipCache()
    checks = 0
    n_env = arch.n_env
    init = (u.skeleton.init, plant.init)
    states = [init]
    seen = {init}
    edges: list = []
    choices: dict = {}
    queue = deque([init])

    def stats() -> dict[str, int]:
        return {"composition_states": len(states), "membership_checks": checks, **cache.stats}

    while queue:
        state = queue.popleft()
        q_c, q_p = state
        candidates = step_composition(q_c, q_p, u, plant, seen if heuristics else None, order)
        by_alpha: dict[int, list] = {}
        for letter, target in candidates:
            by_alpha.setdefault(letter >> n_env & ((1 << arch.n_ctrl) - 1), []).append((letter, target))
        alphas = sorted(by_alpha, reverse=order == "max")
        if heuristics:
            alphas.sort(key=lambda a: -sum(t in seen for _, t in by_alpha[a]))
        passing = []
        for alpha in alphas:
            checks += 1
            if not is_member(plant, u.kappa(q_c, alpha), cache, plant_state=q_p,
                             terminal_shortcut=terminal_shortcut):
                continue
            passing.append(alpha)
            for letter, target in by_alpha[alpha]:
                edges.append((state, letter, target))
                if target not in seen:
                    seen.add(target)
                    states.append(target)
                    queue.append(target)
            if heuristics:
                break
        if not passing:
            if state == init:
                raise Unrealizable("no controller output passes at the initial state", stats())
            raise InternalInvariantError(f"composition state {state} has no passing output")
        choices[state] = passing
    return Composition(u, plant, init, states, edges, choices, stats())


def extract_controller(c: Composition, tie_break: str | Callable[[list[int]], int] = "min") -> MooreMachine:
    """Moore controller reading environment and plant outputs.

    One controller output is selected per composition state; the plant's
    own inputs are ignored when following edges.
    """
    if tie_break == "min":
        pick = min
    elif tie_break == "max":
        pick = max
    elif callable(tie_break):
        pick = tie_break
    else:
        raise ValueError(f"unknown tie-break {tie_break!r}")
    arch = c.u.arch
    n_env = arch.n_env
    inputs = arch.env + arch.plant
    succ: dict = {}
    for src, letter, dst in c.edges:
        succ[(src, letter >> n_env & ((1 << arch.n_ctrl) - 1), letter & ((1 << n_env) - 1))] = dst
    chosen = {}

    def output(state):
        alpha = chosen.get(state)
        if alpha is None:
            alpha = chosen[state] = pick(c.choices[state])
        return alpha

    def successor(state, letter):
        return succ[(state, output(state), letter & ((1 << n_env) - 1))]

    return explore(inputs, arch.ctrl, c.init, successor, output, role="controller",
                   name=lambda k: f"q{k[0]}|{c.plant.names[k[1]]}")


def is_consistent(ctrl: MooreMachine, u: UniversalController, plant: MooreMachine,
                  cache: MembershipCache | None = None) -> bool:
    """Whether ``ctrl`` only emits outputs whose prophecy holds on the plant."""
    arch = u.arch
    check_role(plant, arch)
    if set(ctrl.outputs) != set(arch.ctrl) or not set(ctrl.inputs) <= set(arch.env) | set(arch.plant):
        raise ValueError("controller signature does not match the architecture")
    cache = cache or MembershipCache()
    system = parallel(plant, ctrl)
    to_alpha = remap_table(ctrl.outputs, arch.ctrl)
    for q, k in product_reach(u.skeleton, system):
        s_p, s_c = system.parts[k]
        if not is_member(plant, u.kappa(q, to_alpha[ctrl.out[s_c]]), cache, plant_state=s_p):
            return False
    return True
