"""Sampling, certified logarithms, length bounds, bounded-precision estimation."""

import math
import random
from collections import Counter
from fractions import Fraction

import pytest

from lmcdist import (
    BudgetExceededError,
    DomainError,
    InitialDistribution,
    LengthExceededError,
    Lmc,
    length_bound,
    ln_upper,
    sample_count,
    sample_word,
    tail_mass,
    tv_bounded,
    tv_distance_acyclic,
    tv_sample_acyclic,
    word_probability,
)
from lmcdist.approx import BitStream, _bounded_walk
from lmcdist.floatk import precision_for

from helpers import (
    half_distance_instance,
    worked_example_union,
    random_acyclic_instance,
)

###############################################################################
# Certified logarithm and sample sizes
###############################################################################


def test_ln_upper_is_a_tight_upper_bound():
    for arg in [Fraction(2), Fraction(4), Fraction(10), Fraction(4, 3), Fraction(80)]:
        bound = ln_upper(arg)
        true = math.log(arg)
        assert float(bound) >= true
        assert float(bound) - true < 1e-12


def test_ln_upper_edge_cases():
    assert ln_upper(Fraction(1)) == 0
    with pytest.raises(DomainError):
        ln_upper(Fraction(1, 2))


def test_sample_count_frozen_values():
    assert sample_count(Fraction(1, 10), Fraction(1, 20)) == 877
    assert sample_count(Fraction(1, 20), Fraction(1, 20)) == 3506


def test_sample_count_dominates_hoeffding():
    for eps, delta in [(Fraction(1, 10), Fraction(1, 20)), (Fraction(1, 4), Fraction(1, 100))]:
        m = sample_count(eps, delta)
        assert m >= 2 * math.log(4 / delta) / float(eps) ** 2 - 1


def test_sample_count_rejects_bad_parameters():
    with pytest.raises(DomainError):
        sample_count(Fraction(0), Fraction(1, 2))
    with pytest.raises(DomainError):
        sample_count(Fraction(1, 2), Fraction(1))


###############################################################################
# Bit streams and exact sampling
###############################################################################


def test_bitstream_is_deterministic_and_chunk_consistent():
    a = BitStream(99)
    b = BitStream(99)
    bits = [a.bit() for _ in range(128)]
    chunk = b.bits(128)
    assert chunk == int("".join(map(str, bits)), 2)
    assert a.bits_consumed == b.bits_consumed == 128
    assert BitStream.algorithm == "mt19937"


def test_sample_word_distribution_on_fixture():
    lmc, pi1, _ = half_distance_instance()
    stream = BitStream(42)
    counts = Counter(sample_word(lmc, pi1, stream, 5) for _ in range(2000))
    assert set(counts) == {("a",), ("b",)}
    assert abs(counts[("a",)] / 2000 - 0.5) < 0.05
    # The a/b split needs exactly one bit; everything else is forced.
    assert stream.bits_consumed == 2000


def test_single_outcome_consumes_no_bits():
    lmc = Lmc.from_transitions(
        ["u", "t"], ["a"], [("u", "a", "t", 1)], {"t": 1}
    )
    pi = InitialDistribution.dirac(lmc, "u")
    stream = BitStream(1)
    assert sample_word(lmc, pi, stream, 3) == ("a",)
    assert stream.bits_consumed == 0


def test_sample_word_length_cap():
    lmc = Lmc.from_transitions(["u", "t"], ["a"], [("u", "a", "t", 1)], {"t": 1})
    pi = InitialDistribution.dirac(lmc, "u")
    with pytest.raises(LengthExceededError) as err:
        sample_word(lmc, pi, BitStream(1), 0)
    assert err.value.prefix == ("a",)


def test_sampled_words_match_model_probabilities():
    rng = random.Random(7)
    lmc, pi, _ = random_acyclic_instance(rng)
    stream = BitStream(1234)
    n = 4000
    counts = Counter(sample_word(lmc, pi, stream, 20) for _ in range(n))
    for word, seen in counts.most_common(3):
        expected = word_probability(lmc, pi, word)
        assert abs(seen / n - float(expected)) < 0.05


###############################################################################
# Statistical distance estimation
###############################################################################


def test_tv_sample_deterministic_and_accurate_on_fixture():
    lmc, pi1, pi2 = half_distance_instance()
    est = tv_sample_acyclic(lmc, pi1, pi2, Fraction(1, 20), Fraction(1, 20), seed=7)
    again = tv_sample_acyclic(lmc, pi1, pi2, Fraction(1, 20), Fraction(1, 20), seed=7)
    assert est == again
    assert est.samples_per_side == 3506
    assert est.estimate == 1 - est.p_hat_1 - est.p_hat_2
    assert abs(est.estimate - Fraction(1, 2)) <= Fraction(1, 20)
    assert est.rng_algorithm == "mt19937"


def test_tv_sample_requires_acyclic():
    union, u1, u2 = worked_example_union()
    with pytest.raises(DomainError, match="cycle"):
        tv_sample_acyclic(union, u1, u2, Fraction(1, 10), Fraction(1, 10))


###############################################################################
# Length bounds
###############################################################################


def test_length_bound_is_minimal_for_the_iterative_path():
    union, u1, u2 = worked_example_union()
    lam = Fraction(1, 64)
    n = length_bound(union, lam)
    # Uniform over starts: check the defining property via exact tail masses.
    for pi in (u1, u2):
        assert tail_mass(union, pi, n) <= lam
    assert n > 0
    worst_prev = max(tail_mass(union, pi, n - 1) for pi in (u1, u2))
    assert worst_prev > lam or n == 0


def test_length_bound_fallback_frozen_value():
    lmc = Lmc.from_transitions(
        ["u", "v"],
        ["a"],
        [("u", "a", "v", Fraction(1, 2)), ("v", "a", "u", Fraction(1, 2))],
        {"u": Fraction(1, 2), "v": Fraction(1, 2)},
    )
    assert length_bound(lmc, Fraction(1, 4), step_cap=0) == 12
    # The iterative path needs far less: after one step the tail is 1/4.
    assert length_bound(lmc, Fraction(1, 4)) == 1


def test_length_bound_trivial_cases():
    lmc = Lmc.from_transitions(["u", "t"], ["a"], [("u", "a", "t", 1)], {"t": 1})
    assert length_bound(lmc, Fraction(2)) == 0  # tails never exceed 1
    # Deterministic chain: the fallback is the state count minus one.
    assert length_bound(lmc, Fraction(1, 2), step_cap=0) == 1
    with pytest.raises(DomainError):
        length_bound(lmc, Fraction(0))


###############################################################################
# Bounded-precision estimation
###############################################################################


def test_tv_bounded_exact_on_dyadic_fixture():
    lmc, pi1, pi2 = half_distance_instance()
    for eps in (Fraction(1, 4), Fraction(1, 16)):
        est = tv_bounded(lmc, pi1, pi2, eps)
        assert est.estimate == Fraction(1, 2)
        assert est.estimate == 1 - est.mass1_lt - est.mass2_ge
        assert 0 <= est.estimate <= 1
        assert est.tail_budget == eps / 4
        assert est.rounding_budget == eps / 8


def test_tv_bounded_encloses_exact_distance():
    rng = random.Random(91)
    for _ in range(10):
        lmc, pi1, pi2 = random_acyclic_instance(rng)
        d = tv_distance_acyclic(lmc, pi1, pi2).distance
        for eps in (Fraction(1, 4), Fraction(1, 8)):
            est = tv_bounded(lmc, pi1, pi2, eps)
            assert abs(est.estimate - d) <= eps / 2


def test_tv_bounded_zero_distance():
    lmc, pi1, _ = half_distance_instance()
    est = tv_bounded(lmc, pi1, pi1, Fraction(1, 8))
    assert abs(est.estimate) <= Fraction(1, 16)


def test_tv_bounded_handles_cycles():
    union, u1, u2 = worked_example_union()
    coarse = tv_bounded(union, u1, u2, Fraction(1, 4))
    fine = tv_bounded(union, u1, u2, Fraction(1, 8))
    assert abs(coarse.estimate - fine.estimate) <= Fraction(3, 16)
    assert coarse.length_cutoff < fine.length_cutoff


def test_tv_bounded_budget_and_epsilon_checks():
    lmc, pi1, pi2 = half_distance_instance()
    with pytest.raises(BudgetExceededError):
        tv_bounded(lmc, pi1, pi2, Fraction(1, 8), budget=1)
    with pytest.raises(DomainError):
        tv_bounded(lmc, pi1, pi2, Fraction(0))


def test_bounded_walk_keeps_floats_in_relative_band():
    """Every node of the walk carries k-bit stop probabilities within the
    planned relative error of the exact ones, and with matching zero sets."""
    rng = random.Random(55)
    theta = Fraction(1, 8)
    for _ in range(10):
        lmc, pi1, pi2 = random_acyclic_instance(rng)
        cutoff = 4
        k = precision_for(cutoff, lmc.n_states, theta)
        for _, p1, p2, f1, f2 in _bounded_walk(lmc, pi1, pi2, cutoff, k, 10**6):
            for exact, fp in ((p1, f1), (p2, f2)):
                assert (exact == 0) == fp.is_zero
                assert exact * (1 - theta) <= fp.value <= exact * (1 + theta)
