"""Acceptance criteria, one marked test (or small group) per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary lists
PASS/FAIL per criterion.
"""
import csv
import functools
import math
import random
import time

import pytest

from conftest import EXAMPLE_PLANT
from helpers import (all_controllers, random_arch, random_lasso, random_plant, random_automaton,
                     random_safety_formula, realizable_oracle, safe_prophecy_oracle)
from unisynth import bench
from unisynth.automata import dsa_accepts_lasso, ltl_to_dsa
from unisynth.baseline import standard_synthesis
from unisynth.cli import main, run_standard, run_unicon
from unisynth.logic import Architecture, all_letters, eval_lasso, parse_ltl
from unisynth.machines import bisimilar, parallel, read_mm, reroot
from unisynth.membership import is_member
from unisynth.prophecy import prophecy
from unisynth.synthesis import (Unrealizable, compose, extract_controller, is_consistent,
                                universal_controller)
from unisynth.verify import verify

ARCH = Architecture(env=["o_e"], ctrl=["o_c"], plant=["o_p"])
DRAWN = "(o_c <-> o_p) W !o_e"
LITERAL = "(o_c <-> o_p) W X !o_e"
EXAMPLE_CTRL = ("mm role=controller\ninputs: o_e o_p\noutputs: o_c\ninit: a\n"
                "state a {o_c}\n  o_e -> a\n  else -> b\nstate b {}\n  true -> b\n")
GRID = [(n, t) for n in (2, 3, 4, 5) for t in (1, 2, 3)]
TIMEOUT_S = 300


def three_state_shape(a):
    """Structure of the drawn example automaton, up to renaming of states."""
    if a.n_states != 3 or len(a.safe) != 2:
        return False
    q0 = a.init
    [bad] = set(a.states) - a.safe
    [top] = a.safe - {q0}
    for letter in all_letters(ARCH.ap):
        if "o_e" not in letter:
            want = top
        elif ("o_c" in letter) == ("o_p" in letter):
            want = q0
        else:
            want = bad
        if a.step(q0, letter) != want or a.step(top, letter) != top or a.step(bad, letter) != bad:
            return False
    return True


# -- 1 -------------------------------------------------------------------

@pytest.mark.criterion("1 running example chain")
def test_c1_running_example_chain():
    t0 = time.perf_counter()
    plant = read_mm(EXAMPLE_PLANT)
    a = ltl_to_dsa(parse_ltl(DRAWN, ARCH), ARCH)
    assert three_state_shape(a)

    q0 = a.init
    [q1] = a.safe - {q0}
    [q2] = set(a.states) - a.safe
    o_c = ARCH.mask(["o_c"]) >> ARCH.n_env
    for s in plant.names:
        rooted = reroot(plant, s)
        outputs_op = "o_p" in rooted.output_names(rooted.init)
        for alpha in (0, o_c):
            assert is_member(rooted, prophecy(q1, alpha, a))
            assert not is_member(rooted, prophecy(q2, alpha, a))
            assert is_member(rooted, prophecy(q0, alpha, a)) == ((alpha == o_c) == outputs_op)

    u = universal_controller(parse_ltl(DRAWN, ARCH), ARCH)
    ctrl = extract_controller(compose(u, plant))
    assert bisimilar(ctrl, read_mm(EXAMPLE_CTRL))
    assert time.perf_counter() - t0 < 1.0


@pytest.mark.criterion("1 literal formula isomorphism")
@pytest.mark.xfail(strict=True, reason="the formula with X !o_e needs 5 states; see decisions ledger")
def test_c1_literal_formula_three_states():
    assert three_state_shape(ltl_to_dsa(parse_ltl(LITERAL, ARCH), ARCH))


# -- 2 -------------------------------------------------------------------

@pytest.mark.criterion("2 DSA oracle suite")
def test_c2_dsa_oracle():
    rng = random.Random(2002)
    t0 = time.perf_counter()
    pairs = accepted = 0
    while pairs < 1000:
        arch = random_arch(rng)
        props = list(arch.ap)
        f = random_safety_formula(rng, props, 4)
        a = ltl_to_dsa(f, arch)
        for _ in range(4):
            w = random_lasso(rng, props, 4)
            expected = eval_lasso(f, w)
            assert dsa_accepts_lasso(a, w) == expected, (f, w)
            accepted += expected
            pairs += 1
    assert 0.1 < accepted / pairs < 0.9
    assert time.perf_counter() - t0 < 60


# -- 3 -------------------------------------------------------------------

@pytest.mark.criterion("3 prophecy oracle suite")
def test_c3_prophecy_oracle():
    rng = random.Random(3003)
    t0 = time.perf_counter()
    cases = members = 0
    while cases < 500:
        arch = random_arch(rng)
        a = random_automaton(rng, arch, 5)
        plant = random_plant(rng, arch, 5)
        for (q, alpha, s), expected in safe_prophecy_oracle(a, plant).items():
            p = prophecy(q, arch.mask(alpha) >> arch.n_env, a)
            assert is_member(plant, p, plant_state=s) == expected
            members += expected
            cases += 1
    assert 0 < members < cases
    assert time.perf_counter() - t0 < 120


# -- 4, 6, 9 -------------------------------------------------------------

def random_instances(count, seed):
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        arch = random_arch(rng)
        f = random_safety_formula(rng, list(arch.ap), 3)
        out.append((f, arch, random_plant(rng, arch)))
    return out


INSTANCES = random_instances(400, 4004)


def unicon(f, arch, plant, heuristics):
    u = universal_controller(f, arch)
    try:
        c = compose(u, plant, heuristics=heuristics, terminal_shortcut=heuristics)
    except Unrealizable:
        return "UNREALIZABLE", None
    ctrl = extract_controller(c)
    return "REALIZABLE", verify(parallel(plant, ctrl), u.skeleton).ok


@functools.lru_cache(maxsize=None)
def random_suite(heuristics):
    return [unicon(f, arch, plant, heuristics) for f, arch, plant in INSTANCES]


@functools.lru_cache(maxsize=None)
def grid_suite(heuristics):
    out = {}
    for n, t in GRID:
        f, arch = bench.gen_spec(t)
        out[n, t] = unicon(f, arch, bench.gen_plant(bench.GridWorld(n)), heuristics)
    return out


def check_correctness(results):
    realizable = [ok for verdict, ok in results if verdict == "REALIZABLE"]
    assert len(realizable) >= 200
    assert all(realizable)


def standard_verdict(f, arch, plant):
    try:
        ctrl, _ = standard_synthesis(f, plant, arch)
    except Unrealizable:
        return "UNREALIZABLE"
    assert verify(parallel(plant, ctrl), f, arch).ok
    return "REALIZABLE"


@pytest.mark.criterion("4 correctness")
def test_c4_correctness():
    check_correctness(random_suite(True))


@pytest.mark.criterion("6 realizability agreement (random)")
def test_c6_random_agreement():
    results = random_suite(True)
    for (f, arch, plant), (verdict, _) in zip(INSTANCES, results):
        assert verdict == standard_verdict(f, arch, plant)
        assert (verdict == "REALIZABLE") == realizable_oracle(ltl_to_dsa(f, arch), plant)
    assert {v for v, _ in results} == {"REALIZABLE", "UNREALIZABLE"}


@pytest.mark.criterion("6 realizability agreement (grid)")
def test_c6_grid_agreement():
    results = grid_suite(True)
    for (n, t), (verdict, ok) in results.items():
        f, arch = bench.gen_spec(t)
        assert verdict == standard_verdict(f, arch, bench.gen_plant(bench.GridWorld(n))), (n, t)
        assert ok in (None, True)


@pytest.mark.criterion("9 heuristics off (criterion 4)")
def test_c9_correctness_without_heuristics():
    off = random_suite(False)
    check_correctness(off)
    assert off == random_suite(True)


@pytest.mark.criterion("9 heuristics off (criterion 6)")
def test_c9_agreement_without_heuristics():
    assert grid_suite(False) == grid_suite(True)
    assert [v for v, _ in random_suite(False)] == [v for v, _ in random_suite(True)]


# -- 5 -------------------------------------------------------------------

def permissive_on(f, arch, plant):
    """Number of verified small controllers; each must be consistent."""
    u = universal_controller(f, arch)
    passing = 0
    for ctrl in all_controllers(arch, 2):
        if verify(parallel(plant, ctrl), u.skeleton).ok:
            passing += 1
            assert is_consistent(ctrl, u, plant), ctrl
    return passing


@pytest.mark.criterion("5 permissiveness")
def test_c5_permissiveness():
    assert permissive_on(parse_ltl(DRAWN, ARCH), ARCH, read_mm(EXAMPLE_PLANT)) > 0
    rng = random.Random(5005)
    instances = 0
    while instances < 50:
        arch = random_arch(rng)
        f = random_safety_formula(rng, list(arch.ap), 3)
        if permissive_on(f, arch, random_plant(rng, arch, 4)):
            instances += 1


# -- 7 -------------------------------------------------------------------

def best_of(k, fn):
    best = math.inf
    for _ in range(k):
        t0 = time.perf_counter()
        row = fn()
        best = min(best, time.perf_counter() - t0)
        assert best < TIMEOUT_S
    return best, row


def slope(xs, ys):
    lx = [math.log(x) for x in xs]
    ly = [math.log(y) for y in ys]
    mx, my = sum(lx) / len(lx), sum(ly) / len(ly)
    return sum((a - mx) * (b - my) for a, b in zip(lx, ly)) / sum((a - mx) ** 2 for a in lx)


@pytest.mark.criterion("7 scaling (spec type 3)")
def test_c7_scaling_type3():
    f, arch = bench.gen_spec(3)
    sizes, uni, std = [], [], []
    for n in (4, 6, 8, 10):
        plant = bench.gen_plant(bench.GridWorld(n))
        tu, _ = best_of(3, lambda: run_unicon(f, arch, plant))
        ts, _ = best_of(3, lambda: run_standard(f, arch, plant))
        sizes.append(plant.n_states)
        uni.append(tu)
        std.append(ts)
    fit = slope(sizes, uni)
    print(f"\ntype 3 unicon seconds {[round(t, 4) for t in uni]}, standard {[round(t, 4) for t in std]}, "
          f"log-log slope {fit:.3f}")
    assert fit <= 1.3
    assert uni[-1] <= std[-1]


@pytest.mark.criterion("7 scaling (spec type 1, n=8)")
def test_c7_type1_completes():
    f, arch = bench.gen_spec(1)
    plant = bench.gen_plant(bench.GridWorld(8))
    t, row = best_of(1, lambda: run_unicon(f, arch, plant))
    assert row["verdict"] == "REALIZABLE"
    assert t < TIMEOUT_S


# -- 8 -------------------------------------------------------------------

@pytest.mark.criterion("8 cache effectiveness")
def test_c8_games_solved(tmp_path):
    stats = tmp_path / "grid.csv"
    for n, t in GRID:
        assert main(["bench", "--size", str(n), "--spec-type", str(t), "--method", "unicon",
                     "--stats", str(stats)]) == 0
    for seed in (1, 2):
        assert main(["bench", "--size", "5", "--walls", "maze", "--maze-seed", str(seed),
                     "--spec-type", "1", "--method", "unicon", "--stats", str(stats)]) == 0
    rows = list(csv.DictReader(stats.open()))
    assert len(rows) == len(GRID) + 2
    for row in rows:
        print(f"{row['benchmark']} n={row['grid_size']} type={row['spec_type']}: "
              f"games_solved={row['games_solved']} dsa_states={row['dsa_states']}")
        assert int(row["games_solved"]) <= int(row["dsa_states"])
