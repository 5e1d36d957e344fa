"""Nondeterministic and probabilistic automata, and the instance generators."""

import itertools
import random
from fractions import Fraction

import pytest

from lmcdist import (
    BudgetExceededError,
    DomainError,
    Nfa,
    Pa,
    acceptance_probability,
    accepting_run_count,
    count_accepted_words,
    count_from_distance,
    find_majority_witness,
    is_acyclic,
    nfa_to_lmc,
    pa_to_lmc,
    total_accepting_runs,
    tv_distance_acyclic,
    validate,
    word_probability,
)
from lmcdist.automata import _solve_linear

from helpers import (
    all_two_state_nfas,
    always_accepting_pa,
    at_most_half_pa,
    example_nfa,
)

###############################################################################
# NFA basics
###############################################################################


def test_nfa_validation():
    good = example_nfa()
    assert good.successors("s1", "y") == ("s1", "s2")  # declaration order
    assert good.successors("s2", "x") == ()
    with pytest.raises(DomainError, match="unique"):
        Nfa(("q", "q"), ("x",), "q", frozenset(), frozenset())
    with pytest.raises(DomainError, match="initial"):
        Nfa(("q",), ("x",), "nope", frozenset(), frozenset())
    with pytest.raises(DomainError, match="accepting"):
        Nfa(("q",), ("x",), "q", frozenset({"nope"}), frozenset())
    with pytest.raises(DomainError, match="unknown state"):
        Nfa(("q",), ("x",), "q", frozenset(), frozenset({("q", "x", "nope")}))
    with pytest.raises(DomainError, match="alphabet"):
        Nfa(("q",), ("x",), "q", frozenset(), frozenset({("q", "z", "q")}))
    with pytest.raises(DomainError, match="alphabet"):
        Nfa(("q",), (), "q", frozenset(), frozenset())


def test_accepting_run_counts_by_hand():
    nfa = example_nfa()
    assert accepting_run_count(nfa, ("y", "y", "y")) == 3
    assert accepting_run_count(nfa, ("x", "x", "x")) == 0
    assert accepting_run_count(nfa, ("y", "y")) == 2
    assert accepting_run_count(nfa, ()) == 0
    with pytest.raises(DomainError, match="alphabet"):
        accepting_run_count(nfa, ("z",))


def test_count_accepted_words_frozen_and_brute_forced():
    nfa = example_nfa()
    assert count_accepted_words(nfa, 3) == 4
    assert count_accepted_words(nfa, 0) == 0
    # Independent route: count words with at least one accepting run.
    for machine in all_two_state_nfas()[7::101]:
        for n in range(4):
            brute = sum(
                1
                for word in itertools.product(machine.alphabet, repeat=n)
                if accepting_run_count(machine, word) > 0
            )
            assert count_accepted_words(machine, n) == brute


def test_count_accepted_words_subset_cap():
    with pytest.raises(BudgetExceededError):
        count_accepted_words(example_nfa(), 2, state_cap=1)


def test_total_accepting_runs_matches_per_word_sums():
    nfa = example_nfa()
    assert total_accepting_runs(nfa, 3) == 7
    for machine in [nfa] + all_two_state_nfas()[3::211]:
        for n in range(4):
            per_word = sum(
                accepting_run_count(machine, word)
                for word in itertools.product(machine.alphabet, repeat=n)
            )
            assert total_accepting_runs(machine, n) == per_word


###############################################################################
# Probabilistic automata
###############################################################################


def test_pa_validation():
    at_most_half_pa()  # must construct cleanly
    with pytest.raises(DomainError, match="row of state 'u'"):
        Pa(("u",), ("x",), (((Fraction(1, 2),),),), (Fraction(1),), frozenset())
    with pytest.raises(DomainError, match="initial weights sum"):
        Pa(("u",), ("x",), (((Fraction(1),),),), (Fraction(1, 2),), frozenset())
    with pytest.raises(DomainError, match="not 1x1"):
        Pa(("u",), ("x",), ((),), (Fraction(1),), frozenset())
    with pytest.raises(DomainError, match="one matrix per label"):
        Pa(("u",), ("x", "y"), (((Fraction(1),),),), (Fraction(1),), frozenset())
    with pytest.raises(DomainError, match="outside"):
        Pa(
            ("u", "v"),
            ("x",),
            (((Fraction(3, 2), Fraction(-1, 2)), (Fraction(1), Fraction(0))),),
            (Fraction(1), Fraction(0)),
            frozenset(),
        )
    with pytest.raises(DomainError, match="accepting"):
        Pa(("u",), ("x",), (((Fraction(1),),),), (Fraction(1),), frozenset({"w"}))


def test_acceptance_probability_by_hand():
    pa = at_most_half_pa()
    assert acceptance_probability(pa, ()) == 0
    assert acceptance_probability(pa, ("x",)) == Fraction(1, 2)
    assert acceptance_probability(pa, ("x", "x")) == Fraction(1, 4)
    assert acceptance_probability(always_accepting_pa(), ("x", "x", "x")) == 1
    with pytest.raises(DomainError, match="alphabet"):
        acceptance_probability(pa, ("z",))


def test_majority_witness_search():
    assert find_majority_witness(always_accepting_pa(), 2) == ()
    assert find_majority_witness(at_most_half_pa(), 5) is None
    # A deterministic automaton accepting exactly the words starting with x:
    # the shortest majority word is ("x",), found before any length-2 word.
    pa = Pa(
        states=("u", "yes", "no"),
        alphabet=("x", "y"),
        matrices=(
            (
                (Fraction(0), Fraction(1), Fraction(0)),
                (Fraction(0), Fraction(1), Fraction(0)),
                (Fraction(0), Fraction(0), Fraction(1)),
            ),
            (
                (Fraction(0), Fraction(0), Fraction(1)),
                (Fraction(0), Fraction(1), Fraction(0)),
                (Fraction(0), Fraction(0), Fraction(1)),
            ),
        ),
        initial=(Fraction(1), Fraction(0), Fraction(0)),
        accepting=frozenset({"yes"}),
    )
    assert find_majority_witness(pa, 3) == ("x",)


###############################################################################
# Counting reduction (NFA -> distance instance)
###############################################################################


def test_nfa_reduction_shape_and_identity():
    out = nfa_to_lmc(example_nfa(), 3)
    assert out.kind == "nfa"
    assert out.params == {"word_length": 3, "alphabet_size": 2, "state_count": 2}
    assert validate(out.lmc) == []
    assert is_acyclic(out.lmc)
    assert out.baseline_gap == Fraction(7, 64)
    d = tv_distance_acyclic(out.lmc, out.pi1, out.pi2).distance
    assert d == Fraction(11, 64)
    # distance = gap + (k^n - count) / (k^n s^n) with count = 4 accepted words
    assert d == out.baseline_gap + Fraction(8 - 4, 8 * 8)


def test_nfa_reduction_identity_on_machine_sample():
    # A thin slice of the exhaustive two-state sweep (the acceptance gate
    # runs the full cross product).
    for machine in all_two_state_nfas()[5::149]:
        out = nfa_to_lmc(machine, 2)
        count = count_accepted_words(machine, 2)
        d = tv_distance_acyclic(out.lmc, out.pi1, out.pi2).distance
        assert d == out.baseline_gap + Fraction(4 - count, 4 * 4)


def test_nfa_reduction_input_checks():
    with pytest.raises(DomainError, match="at least 1"):
        nfa_to_lmc(example_nfa(), 0)
    clash = Nfa(("q",), ("acc",), "q", frozenset(), frozenset({("q", "acc", "q")}))
    with pytest.raises(DomainError, match="reserved"):
        nfa_to_lmc(clash, 1)


def test_count_recovery_tolerates_certified_error():
    out = nfa_to_lmc(example_nfa(), 3)
    gap = out.baseline_gap
    d = Fraction(11, 64)
    assert count_from_distance(gap, d, 3, 2, 2) == 4
    wiggle = Fraction(1, 4 * 8 * 8)  # a quarter of a count unit
    assert count_from_distance(gap, d + wiggle, 3, 2, 2) == 4
    assert count_from_distance(gap, d - wiggle, 3, 2, 2) == 4
    with pytest.raises(DomainError, match="not accurate enough"):
        count_from_distance(gap, d + Fraction(1, 2 * 64), 3, 2, 2)
    with pytest.raises(DomainError, match="outside"):
        count_from_distance(gap, gap - Fraction(2, 64), 3, 2, 2)
    with pytest.raises(DomainError, match="positive"):
        count_from_distance(gap, d, 0, 2, 2)


###############################################################################
# Majority reduction (PA -> distance instance)
###############################################################################


def test_pa_reduction_always_accepting():
    out = pa_to_lmc(always_accepting_pa())
    assert out.kind == "pa"
    assert validate(out.lmc) == []
    assert out.bound == 0
    # Witness event: everything except the word ("acc",).  Its mass gap is
    # 3/4 - 1/2 = 1/4 > bound, certifying the distance exceeds the bound.
    p1_acc = word_probability(out.lmc, out.pi1, ("acc",))
    p2_acc = word_probability(out.lmc, out.pi2, ("acc",))
    assert (1 - p1_acc) - (1 - out.bound - p2_acc) == Fraction(1, 4)


def test_pa_reduction_word_equations():
    pa = at_most_half_pa()
    out = pa_to_lmc(pa)
    crawl = Fraction(1, 2)  # 1/(2k) with k = 1
    for m in range(4):
        w = ("x",) * m
        rate = crawl**m
        assert word_probability(out.lmc, out.pi1, w + ("b",)) == rate * Fraction(1, 4)
        assert word_probability(out.lmc, out.pi1, w + ("acc",)) == rate * Fraction(1, 4)
        pr = acceptance_probability(pa, w)
        assert word_probability(out.lmc, out.pi2, w + ("acc",)) == rate * pr / 2
        assert word_probability(out.lmc, out.pi2, w + ("rej",)) == rate * (1 - pr) / 2
        assert word_probability(out.lmc, out.pi2, w + ("b",)) == 0


def test_pa_reduction_bound_is_exact_acc_mass():
    out = pa_to_lmc(at_most_half_pa())
    # Solved by hand: total acc mass is 1/5, so the bound is 4/5.
    assert out.bound == Fraction(4, 5)


def test_pa_reduction_renames_on_collision():
    pa = Pa(
        states=("start",),
        alphabet=("x",),
        matrices=(((Fraction(1),),),),
        initial=(Fraction(1),),
        accepting=frozenset({"start"}),
    )
    out = pa_to_lmc(pa)
    assert "start'" in out.lmc.states
    assert validate(out.lmc) == []
    with pytest.raises(DomainError, match="reserved"):
        pa_to_lmc(
            Pa(("u",), ("rej",), (((Fraction(1),),),), (Fraction(1),), frozenset())
        )


def test_linear_solver_rejects_singular_systems():
    with pytest.raises(DomainError, match="singular"):
        _solve_linear(
            ((Fraction(1), Fraction(1)), (Fraction(1), Fraction(1))),
            (Fraction(1), Fraction(0)),
        )
