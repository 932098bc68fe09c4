import random

import pytest

from helpers import random_arch, random_automaton, random_lasso, random_safety_formula
from unisynth.automata import (AutomatonFormatError, ResourceLimitExceeded, SafetyAutomaton,
                               dsa_accepts_lasso, dsa_to_dot, ltl_to_dsa, product_reach, read_dsa,
                               write_dsa)
from unisynth.logic import (TRUE, Architecture, LassoWord, SafetyFragmentViolation, all_letters,
                            eval_lasso, parse_ltl)
from unisynth.machines import MooreMachine, parallel, read_mm

ARCH = Architecture(env=["o_e"], ctrl=["o_c"], plant=["o_p"])
DRAWN = "(o_c <-> o_p) W !o_e"


def example_dsa():
    return ltl_to_dsa(parse_ltl(DRAWN, ARCH), ARCH)


def edge(a, q, names):
    return a.step(q, names)


class TestTranslation:
    def test_example_structure(self):
        a = example_dsa()
        assert a.n_states == 3 and a.safe == {0, 1} and a.init == 0
        for letter in all_letters(ARCH.ap):
            t = edge(a, 0, letter)
            if "o_e" not in letter:
                assert t == 1
            elif ("o_c" in letter) == ("o_p" in letter):
                assert t == 0
            else:
                assert t == 2
            assert edge(a, 1, letter) == 1 and edge(a, 2, letter) == 2

    def test_next_step_variant_needs_five_states(self):
        # pending obligation "!o_e next" is remembered, so two extra residues appear
        a = ltl_to_dsa(parse_ltl("(o_c <-> o_p) W (X !o_e)", ARCH), ARCH)
        assert a.n_states == 5 and len(a.safe) == 4

    def test_true(self):
        a = ltl_to_dsa(TRUE, ARCH)
        assert a.n_states == 1 and a.safe == {0}

    def test_globally_not_col(self):
        arch = Architecture(ctrl=["c"], plant=["col"])
        a = ltl_to_dsa(parse_ltl("G !col", arch), arch)
        assert a.n_states == 2 and len(a.safe) == 1
        assert a.step(0, {"col"}) == a.sink and a.step(0, {"c"}) == 0

    def test_fragment_violation(self):
        with pytest.raises(SafetyFragmentViolation):
            ltl_to_dsa(parse_ltl("F o_e", ARCH), ARCH)

    def test_resource_cap(self):
        arch = Architecture(env=["a"], ctrl=["b"])
        f = parse_ltl("G (a -> X X X X b)", arch)
        with pytest.raises(ResourceLimitExceeded):
            ltl_to_dsa(f, arch, max_states=4)

    def test_collapse_threshold_keeps_language(self):
        rng = random.Random(7)
        props = ["a", "b", "c"]
        arch = Architecture(env=["a"], ctrl=["b"], plant=["c"])
        for _ in range(60):
            f = random_safety_formula(rng, props)
            a = ltl_to_dsa(f, arch, collapse_threshold=0)
            for _ in range(5):
                w = random_lasso(rng, props)
                assert dsa_accepts_lasso(a, w) == eval_lasso(f, w)

    def test_structural_invariants(self):
        rng = random.Random(8)
        for _ in range(100):
            arch = random_arch(rng)
            f = random_safety_formula(rng, list(arch.ap))
            a = ltl_to_dsa(f, arch)
            assert all(len(row) == arch.n_letters for row in a.trans)
            assert len(a.reachable()) == a.n_states
            for q in a.states:
                if q not in a.safe:
                    assert a.reachable(q) == {q}


class TestRuns:
    def test_example_lassos(self):
        a = example_dsa()
        assert dsa_accepts_lasso(a, LassoWord([], [{"o_e", "o_c", "o_p"}]))
        assert not dsa_accepts_lasso(a, LassoWord([], [{"o_e", "o_c"}]))
        t = ltl_to_dsa(TRUE, ARCH)
        assert dsa_accepts_lasso(t, LassoWord([{"o_e"}], [set(), {"o_c"}]))

    def test_product_reach(self, example_plant):
        a = example_dsa()
        assert {q for q, _ in product_reach(a, example_plant)} == {0, 1, 2}
        ctrl = read_mm("mm role=controller\ninputs: o_e o_p\noutputs: o_c\ninit: a\n"
                       "state a {o_c}\n  o_e -> a\n  else -> b\nstate b {}\n  true -> b\n")
        assert {q for q, _ in product_reach(a, parallel(example_plant, ctrl))} <= {0, 1}

    def test_product_reach_closed_machine(self):
        arch = Architecture(plant=["p"])
        a = ltl_to_dsa(TRUE, arch)
        m = MooreMachine((), ("p",), ((0,),), (1,))
        assert product_reach(a, m) == {(0, 0)}


class TestFormat:
    def test_round_trip(self):
        rng = random.Random(9)
        for _ in range(50):
            arch = random_arch(rng)
            a = random_automaton(rng, arch)
            b = read_dsa(write_dsa(a))
            assert b.trans == a.trans and b.safe == a.safe and b.init == a.init
            assert write_dsa(b) == write_dsa(a)

    def test_uc_header(self):
        text = write_dsa(example_dsa(), kind="uc")
        assert text.startswith("uc\narch: o_e ; o_c ; o_p\n")
        with pytest.raises(AutomatonFormatError):
            read_dsa(text, kind="dsa")

    @pytest.mark.parametrize("body", [
        "state q0\n  o_e -> q0\n",                      # incomplete
        "state q0\n  o_e -> q0\n  true -> q0\n",        # overlap
        "state q0\n  else -> q0\n  else -> q0\n",       # two else
        "state q0\n  true -> q9\n",                     # unknown target
    ])
    def test_rejects_bad_guards(self, body):
        with pytest.raises(AutomatonFormatError):
            read_dsa("dsa\narch: o_e ; o_c ; o_p\ninit: q0\nsafe: q0\n" + body)

    def test_rejects_non_sink_unsafe(self):
        text = "dsa\narch: o_e ; o_c ; o_p\ninit: q0\nsafe: q0\nstate q0\n  true -> q1\nstate q1\n  true -> q0\n"
        with pytest.raises((AutomatonFormatError, ValueError)):
            read_dsa(text)

    def test_dot(self):
        dot = dsa_to_dot(example_dsa())
        assert dot.startswith("digraph") and "q2" in dot


def test_validation_rejects_unreachable_states():
    arch = Architecture(plant=["p"])
    with pytest.raises(ValueError):
        SafetyAutomaton(arch, ((0, 0), (1, 1)), 0, frozenset({0, 1}))
