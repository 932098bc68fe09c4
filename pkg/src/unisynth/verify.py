"""Model checking of Moore machines against safety specifications."""
from __future__ import annotations

from dataclasses import dataclass

from .automata import SafetyAutomaton, ltl_to_dsa, product_search
from .logic import Architecture, LassoWord, LtlFormula, remap_table
from .machines import MooreMachine


@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    counterexample: LassoWord | None = None
    product_states: int = 0

    def __bool__(self) -> bool:
        return self.ok


def verify(system: MooreMachine, f: LtlFormula | SafetyAutomaton,
           arch: Architecture | None = None) -> VerifyResult:
    """Check every trace of ``system`` against ``f``.

    Propositions the system does not output are chosen freely at every
    step. On failure the result carries a lasso that is a trace of the
    system and violates ``f``: a shortest path to the unsafe sink,
    continued with all free propositions false until a product state
    repeats.
    """
    if isinstance(f, SafetyAutomaton):
        a = f
    else:
        if arch is None:
            raise ValueError("an architecture is required for a formula")
        a = ltl_to_dsa(f, arch)
    arch = a.arch
    seen, parent, hit = product_search(a, system, stop_unsafe=True)
    if hit is None:
        return VerifyResult(True, None, len(seen))

    letters: list[int] = []
    node = hit
    while parent[node] is not None:
        node, letter = parent[node]
        letters.append(letter)
    letters.reverse()

    out_global = remap_table(system.outputs, arch.ap)
    path = [hit]
    where = {hit: 0}
    while True:
        q, s = path[-1]
        letter = out_global[system.out[s]]
        letters.append(letter)
        nxt = (a.trans[q][letter], system.trans[s][0])
        if nxt in where:
            break
        where[nxt] = len(path)
        path.append(nxt)
    split = len(letters) - len(path) + where[nxt]
    word = [arch.names(x) for x in letters]
    return VerifyResult(False, LassoWord(tuple(word[:split]), tuple(word[split:])), len(seen))


def format_lasso(w: LassoWord, props) -> str:
    """Valuation sequence in formula syntax, loop part in ``( ... )^w``."""
    def val(letter):
        return " & ".join(p if p in letter else f"!{p}" for p in props) or "true"

    head = " ; ".join(f"{{{val(x)}}}" for x in w.prefix)
    loop = " ; ".join(f"{{{val(x)}}}" for x in w.loop)
    return f"{head} ; ({loop})^w" if head else f"({loop})^w"
