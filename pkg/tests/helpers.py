"""Shared fixtures and random-instance builders for the test suite.

All randomness flows through explicitly seeded ``random.Random`` instances,
so every test is deterministic run to run.
"""

from __future__ import annotations

import random
from fractions import Fraction

from lmcdist import InitialDistribution, Lmc, Nfa, Pa, disjoint_union

# ---------------------------------------------------------------------------
# Hand-built fixtures
# ---------------------------------------------------------------------------


def half_distance_instance() -> tuple[Lmc, InitialDistribution, InitialDistribution]:
    """Two starts at exact distance 1/2: one splits a/b evenly, one always a."""
    lmc = Lmc.from_transitions(
        ["s", "s2", "t"],
        ["a", "b"],
        [
            ("s", "a", "t", Fraction(1, 2)),
            ("s", "b", "t", Fraction(1, 2)),
            ("s2", "a", "t", 1),
        ],
        {"t": 1},
    )
    return (
        lmc,
        InitialDistribution.dirac(lmc, "s"),
        InitialDistribution.dirac(lmc, "s2"),
    )


def worked_example_pair() -> tuple[Lmc, InitialDistribution, Lmc, InitialDistribution]:
    """The two one-loop/two-state cyclic chains with pi1(aa) = 1/16 and
    pi2(aa) = 5/36."""
    first = Lmc.from_transitions(
        ["q1"],
        ["a", "b"],
        [("q1", "a", "q1", Fraction(1, 2)), ("q1", "b", "q1", Fraction(1, 4))],
        {"q1": Fraction(1, 4)},
    )
    second = Lmc.from_transitions(
        ["q2", "q3"],
        ["a", "b"],
        [
            ("q2", "a", "q2", Fraction(1, 3)),
            ("q2", "b", "q2", Fraction(1, 3)),
            ("q2", "a", "q3", Fraction(1, 3)),
            ("q3", "a", "q3", Fraction(1, 2)),
        ],
        {"q3": Fraction(1, 2)},
    )
    return (
        first,
        InitialDistribution.dirac(first, "q1"),
        second,
        InitialDistribution.dirac(second, "q2"),
    )


def worked_example_union() -> tuple[Lmc, InitialDistribution, InitialDistribution]:
    first, pi1, second, pi2 = worked_example_pair()
    return disjoint_union(first, pi1, second, pi2)


def example_nfa() -> Nfa:
    """Two states over a two-letter alphabet; accepts words containing ``y``.

    Frozen facts (verified by brute force before the implementation existed):
    4 of the 8 words of length 3 are accepted, with 7 accepting runs in total,
    e.g. 3 runs on yyy and 0 on xxx.
    """
    return Nfa(
        states=("s1", "s2"),
        alphabet=("x", "y"),
        initial="s1",
        accepting=frozenset({"s2"}),
        transitions=frozenset(
            {
                ("s1", "x", "s1"),
                ("s1", "y", "s1"),
                ("s1", "y", "s2"),
                ("s2", "y", "s2"),
            }
        ),
    )


def always_accepting_pa() -> Pa:
    """One state, always accepting: every word has acceptance probability 1."""
    return Pa(
        states=("u",),
        alphabet=("x",),
        matrices=(((Fraction(1),),),),
        initial=(Fraction(1),),
        accepting=frozenset({"u"}),
    )


def at_most_half_pa() -> Pa:
    """Acceptance probability is exactly 1/2 for ``x`` and below 1/2 for every
    other word -- never strictly above, so no majority witness exists."""
    half = Fraction(1, 2)
    return Pa(
        states=("u", "f"),
        alphabet=("x",),
        matrices=((((half), half), (Fraction(1), Fraction(0))),),
        initial=(Fraction(1), Fraction(0)),
        accepting=frozenset({"f"}),
    )


def all_two_state_nfas() -> list[Nfa]:
    """Every NFA with states {A, B}, alphabet {x, y}, initial A: all 256
    transition sets crossed with all 4 accepting sets."""
    states = ("A", "B")
    alphabet = ("x", "y")
    triples = [(s, a, t) for s in states for a in alphabet for t in states]
    machines = []
    for mask in range(1 << len(triples)):
        trans = frozenset(t for i, t in enumerate(triples) if mask >> i & 1)
        for fmask in range(4):
            acc = frozenset(s for i, s in enumerate(states) if fmask >> i & 1)
            machines.append(
                Nfa(
                    states=states,
                    alphabet=alphabet,
                    initial="A",
                    accepting=acc,
                    transitions=trans,
                )
            )
    return machines


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------


def random_acyclic_lmc(
    rng: random.Random, max_states: int = 5, n_labels: int = 2
) -> Lmc:
    """A random acyclic chain: edges only go forward in state order, weights
    are small integers normalized per state, and any state without outgoing
    edges stops with probability 1, so validity is guaranteed."""
    n = rng.randint(2, max_states)
    states = [f"s{i}" for i in range(n)]
    alphabet = ("a", "b")[:n_labels]
    transitions = []
    eow = {}
    for i in range(n):
        weights: dict[tuple[str, int], int] = {}
        for j in range(i + 1, n):
            for a in alphabet:
                if rng.random() < 0.5:
                    weights[(a, j)] = rng.randint(1, 4)
        stop = rng.randint(0, 3)
        if not weights and stop == 0:
            stop = 1
        total = stop + sum(weights.values())
        for (a, j), w in weights.items():
            transitions.append((states[i], a, states[j], Fraction(w, total)))
        if stop:
            eow[states[i]] = Fraction(stop, total)
    return Lmc.from_transitions(states, alphabet, transitions, eow)


def random_cyclic_lmc(
    rng: random.Random, max_states: int = 4, n_labels: int = 2
) -> Lmc:
    """A random chain with cycles allowed; every state keeps a positive
    stopping probability, so validity is guaranteed."""
    n = rng.randint(2, max_states)
    states = [f"s{i}" for i in range(n)]
    alphabet = ("a", "b")[:n_labels]
    transitions = []
    eow = {}
    for i in range(n):
        weights: dict[tuple[str, int], int] = {}
        for j in range(n):
            for a in alphabet:
                if rng.random() < 0.4:
                    weights[(a, j)] = rng.randint(1, 4)
        stop = rng.randint(1, 3)
        total = stop + sum(weights.values())
        for (a, j), w in weights.items():
            transitions.append((states[i], a, states[j], Fraction(w, total)))
        eow[states[i]] = Fraction(stop, total)
    return Lmc.from_transitions(states, alphabet, transitions, eow)


def random_distribution(rng: random.Random, lmc: Lmc) -> InitialDistribution:
    size = rng.randint(1, lmc.n_states)
    support = rng.sample(list(lmc.states), size)
    weights = {s: rng.randint(1, 4) for s in support}
    total = sum(weights.values())
    return InitialDistribution.from_map(
        lmc, {s: Fraction(w, total) for s, w in weights.items()}
    )


def random_acyclic_instance(
    rng: random.Random, max_states: int = 5
) -> tuple[Lmc, InitialDistribution, InitialDistribution]:
    lmc = random_acyclic_lmc(rng, max_states=max_states)
    return lmc, random_distribution(rng, lmc), random_distribution(rng, lmc)


def relabeled_copy(lmc: Lmc, pi: InitialDistribution, prefix: str = "t") -> tuple[Lmc, InitialDistribution]:
    """The same chain with states renamed and reordered (reversed order)."""
    names = {s: f"{prefix}{i}" for i, s in enumerate(lmc.states)}
    new_states = [names[s] for s in reversed(lmc.states)]
    transitions = [
        (names[src], label, names[tgt], prob)
        for src, label, tgt, prob in lmc.transition_records()
    ]
    eow = {names[s]: e for s, e in zip(lmc.states, lmc.eow) if e}
    copy = Lmc.from_transitions(new_states, lmc.alphabet, transitions, eow)
    weights = {names[s]: w for s, w in zip(lmc.states, pi.weights) if w}
    return copy, InitialDistribution.from_map(copy, weights)
