"""Reductions from automata problems to distance computation.

Two generators turn classical automata questions into labelled-Markov-chain
distance instances, pinning the hardness of distance computation:

* ``nfa_to_lmc`` -- counting: for an NFA and a length n it builds a chain and
  two starting distributions whose distance determines |L(A) ∩ Σ^n|, the
  number of accepted words of that length, through the exact identity

      distance = baseline_gap + (k^n - count) / (k^n * s^n)

  with k the alphabet size, s the NFA state count, and ``baseline_gap``
  computed from the total number of accepting runs (cheap integer matrix
  powering -- no word enumeration).  ``count_from_distance`` inverts the
  identity and tolerates an estimation error below 1/3 of a count unit.

* ``pa_to_lmc`` -- optimization: for a probabilistic automaton it builds an
  instance whose distance equals a certified ``bound`` exactly when no word
  is accepted with probability above 1/2, and strictly exceeds it otherwise.
  ``find_majority_witness`` searches for such a word; one witness yields an
  explicit event separating the two distributions beyond the bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .errors import BudgetExceededError, DomainError
from .model import (
    ONE,
    ZERO,
    InitialDistribution,
    Lmc,
    Matrix,
    Word,
    as_fraction,
)

#: Labels appended to the input alphabet by both reductions.
RESERVED_LABELS = ("b", "acc", "rej")


# -- nondeterministic finite automata ------------------------------------------


@dataclass(frozen=True)
class Nfa:
    """A nondeterministic finite automaton with a single initial state.

    ``transitions`` is a set of (source, label, target) triples; acceptance
    means some run over the whole word ends in an accepting state.
    """

    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    initial: str
    accepting: frozenset[str]
    transitions: frozenset[tuple[str, str, str]]

    def __post_init__(self) -> None:
        states = tuple(self.states)
        alphabet = tuple(self.alphabet)
        accepting = frozenset(self.accepting)
        transitions = frozenset(self.transitions)
        if len(set(states)) != len(states):
            raise DomainError("state names must be unique")
        if len(set(alphabet)) != len(alphabet):
            raise DomainError("labels must be unique")
        if not alphabet:
            raise DomainError("alphabet must not be empty")
        known = set(states)
        if self.initial not in known:
            raise DomainError(f"initial state {self.initial!r} is not declared")
        for q in accepting:
            if q not in known:
                raise DomainError(f"accepting state {q!r} is not declared")
        labels = set(alphabet)
        for src, label, tgt in transitions:
            if src not in known or tgt not in known:
                raise DomainError(f"transition ({src!r}, {label!r}, {tgt!r}) names an unknown state")
            if label not in labels:
                raise DomainError(f"transition label {label!r} is not in the alphabet")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "accepting", accepting)
        object.__setattr__(self, "transitions", transitions)

    @cached_property
    def _delta(self) -> Mapping[tuple[str, str], tuple[str, ...]]:
        order = {q: i for i, q in enumerate(self.states)}
        grouped: dict[tuple[str, str], list[str]] = {}
        for src, label, tgt in self.transitions:
            grouped.setdefault((src, label), []).append(tgt)
        return {
            key: tuple(sorted(tgts, key=order.__getitem__))
            for key, tgts in grouped.items()
        }

    def successors(self, state: str, label: str) -> tuple[str, ...]:
        """Targets of ``state`` under ``label``, in declaration order."""
        return self._delta.get((state, label), ())


def accepting_run_count(nfa: Nfa, word: Word) -> int:
    """Number of accepting runs of the automaton on the word."""
    counts = {nfa.initial: 1}
    for label in word:
        if label not in nfa.alphabet:
            raise DomainError(f"letter {label!r} is not in the automaton's alphabet")
        nxt: dict[str, int] = {}
        for q, c in counts.items():
            for t in nfa.successors(q, label):
                nxt[t] = nxt.get(t, 0) + c
        counts = nxt
    return sum(c for q, c in counts.items() if q in nfa.accepting)


def count_accepted_words(nfa: Nfa, length: int, state_cap: int = 2**20) -> int:
    """|L(A) ∩ Σ^length| by determinization on the fly.

    Tracks how many words of each length lead to each reachable state subset;
    raises ``BudgetExceededError`` if more than ``state_cap`` subsets appear
    in one layer (worst case 2^s, so this is the oracle of last resort).
    """
    if length < 0:
        raise DomainError(f"word length must be nonnegative, got {length}")
    layer: dict[frozenset[str], int] = {frozenset({nfa.initial}): 1}
    for _ in range(length):
        nxt: dict[frozenset[str], int] = {}
        for subset, c in layer.items():
            for label in nfa.alphabet:
                succ = frozenset(
                    t for q in subset for t in nfa.successors(q, label)
                )
                nxt[succ] = nxt.get(succ, 0) + c
        if len(nxt) > state_cap:
            raise BudgetExceededError(
                f"subset construction exceeded {state_cap} subsets",
                nodes_visited=len(nxt),
            )
        layer = nxt
    return sum(c for subset, c in layer.items() if subset & nfa.accepting)


def total_accepting_runs(nfa: Nfa, length: int) -> int:
    """Accepting runs summed over *all* words of the given length.

    Unlike the accepted-word count this needs no determinization: it is one
    integer vector iterated ``length`` times through the combined adjacency
    counts.
    """
    if length < 0:
        raise DomainError(f"word length must be nonnegative, got {length}")
    counts = {nfa.initial: 1}
    for _ in range(length):
        nxt: dict[str, int] = {}
        for q, c in counts.items():
            for label in nfa.alphabet:
                for t in nfa.successors(q, label):
                    nxt[t] = nxt.get(t, 0) + c
        counts = nxt
    return sum(c for q, c in counts.items() if q in nfa.accepting)


# -- probabilistic automata -----------------------------------------------------


@dataclass(frozen=True)
class Pa:
    """A probabilistic automaton: one stochastic matrix per letter, an initial
    distribution over states, and a set of accepting states.

    ``acceptance_probability`` of a word is the chance that the random walk
    it drives ends in an accepting state.
    """

    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    matrices: tuple[Matrix, ...]
    initial: tuple[Fraction, ...]
    accepting: frozenset[str]

    def __post_init__(self) -> None:
        states = tuple(self.states)
        alphabet = tuple(self.alphabet)
        accepting = frozenset(self.accepting)
        if len(set(states)) != len(states):
            raise DomainError("state names must be unique")
        if len(set(alphabet)) != len(alphabet):
            raise DomainError("labels must be unique")
        if not states:
            raise DomainError("automaton needs at least one state")
        n = len(states)
        mats = tuple(self.matrices)
        if len(mats) != len(alphabet):
            raise DomainError(
                f"expected one matrix per label ({len(alphabet)}), got {len(mats)}"
            )
        coerced = []
        for label, mat in zip(alphabet, mats):
            mat = tuple(tuple(as_fraction(p, "transition probability") for p in row) for row in mat)
            if len(mat) != n or any(len(row) != n for row in mat):
                raise DomainError(f"matrix for label {label!r} is not {n}x{n}")
            for i, row in enumerate(mat):
                if any(p < 0 or p > 1 for p in row):
                    raise DomainError(
                        f"matrix for label {label!r} has an entry outside [0, 1] "
                        f"in the row of state {states[i]!r}"
                    )
                if sum(row, ZERO) != 1:
                    raise DomainError(
                        f"row of state {states[i]!r} under label {label!r} sums to "
                        f"{sum(row, ZERO)}, expected 1"
                    )
            coerced.append(mat)
        init = tuple(as_fraction(p, "initial weight") for p in self.initial)
        if len(init) != n:
            raise DomainError(f"initial distribution has {len(init)} entries, expected {n}")
        if any(p < 0 or p > 1 for p in init):
            raise DomainError("initial weights must lie in [0, 1]")
        if sum(init, ZERO) != 1:
            raise DomainError(f"initial weights sum to {sum(init, ZERO)}, expected 1")
        for q in accepting:
            if q not in set(states):
                raise DomainError(f"accepting state {q!r} is not declared")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "matrices", tuple(coerced))
        object.__setattr__(self, "initial", init)
        object.__setattr__(self, "accepting", accepting)

    @cached_property
    def label_index(self) -> Mapping[str, int]:
        return {a: i for i, a in enumerate(self.alphabet)}

    @cached_property
    def accepting_vector(self) -> tuple[Fraction, ...]:
        return tuple(ONE if q in self.accepting else ZERO for q in self.states)


def acceptance_probability(pa: Pa, word: Word) -> Fraction:
    """Exact probability that the automaton accepts the word."""
    vec = list(pa.initial)
    n = len(pa.states)
    for label in word:
        li = pa.label_index.get(label)
        if li is None:
            raise DomainError(f"letter {label!r} is not in the automaton's alphabet")
        mat = pa.matrices[li]
        vec = [
            sum((vec[i] * mat[i][j] for i in range(n) if vec[i]), ZERO)
            for j in range(n)
        ]
    return sum(
        (p for p, flag in zip(vec, pa.accepting_vector) if flag), ZERO
    )


def find_majority_witness(pa: Pa, max_len: int) -> Word | None:
    """Shortest word accepted with probability strictly above 1/2, trying
    lengths 0..max_len in alphabet order; None if none exists in that range.

    Exhaustive (k^max_len words), so keep ``max_len`` small; no loss of
    exactness, only of patience.
    """
    half = Fraction(1, 2)
    n = len(pa.states)
    layer: list[tuple[tuple[str, ...], list[Fraction]]] = [((), list(pa.initial))]
    for length in range(max_len + 1):
        for word, vec in layer:
            acc = sum(
                (p for p, flag in zip(vec, pa.accepting_vector) if flag), ZERO
            )
            if acc > half:
                return word
        if length == max_len:
            break
        nxt = []
        for word, vec in layer:
            for li, label in enumerate(pa.alphabet):
                mat = pa.matrices[li]
                nxt.append(
                    (
                        word + (label,),
                        [
                            sum((vec[i] * mat[i][j] for i in range(n) if vec[i]), ZERO)
                            for j in range(n)
                        ],
                    )
                )
        layer = nxt
    return None


# -- reductions -----------------------------------------------------------------


@dataclass(frozen=True)
class ReductionOutput:
    """A generated distance instance plus the quantities tying it back to the
    source problem.

    For NFA instances ``baseline_gap`` is the run-count term of the distance
    identity and ``bound`` is None; for probabilistic-automaton instances
    ``bound`` is the certified distance lower bound (attained exactly when no
    word is accepted with probability above 1/2) and ``baseline_gap`` is None.
    """

    lmc: Lmc
    pi1: InitialDistribution
    pi2: InitialDistribution
    kind: str
    params: Mapping[str, int] = field(default_factory=dict)
    baseline_gap: Fraction | None = None
    bound: Fraction | None = None


def _check_reserved(alphabet: Iterable[str]) -> None:
    clash = sorted(set(alphabet) & set(RESERVED_LABELS))
    if clash:
        raise DomainError(
            f"alphabet uses reserved label(s) {', '.join(map(repr, clash))}; "
            f"the reduction appends {', '.join(map(repr, RESERVED_LABELS))}"
        )


def nfa_to_lmc(nfa: Nfa, word_length: int) -> ReductionOutput:
    """Encode counting the NFA's accepted words of one length as a distance.

    The first start walks an n-step spine emitting uniformly random letters
    and then flags a vanishing fraction of its words with ``b``; the second
    simulates one uniformly chosen run of the automaton, emitting ``acc`` or
    ``rej`` according to where the run ends (mass that would need more than
    s simultaneous successors overflows into a reject lane).  Every word of
    length n shifts the distance by an exact multiple of 1/(k^n s^n)
    depending on whether it is accepted, giving

        distance = baseline_gap + (k^n - |L ∩ Σ^n|) / (k^n * s^n).
    """
    if word_length < 1:
        raise DomainError(f"word length must be at least 1, got {word_length}")
    _check_reserved(nfa.alphabet)
    n = word_length
    k = len(nfa.alphabet)
    s = len(nfa.states)
    ordered = (nfa.initial,) + tuple(q for q in nfa.states if q != nfa.initial)

    def run_state(i: int, q: str) -> str:
        return f"q{i}:{q}"

    spine = [f"p{i}" for i in range(n + 1)]
    lanes = [f"r{i}" for i in range(n + 1)]
    states = (
        spine
        + [run_state(i, q) for i in range(n + 1) for q in ordered]
        + lanes
        + ["eow"]
    )
    letter = Fraction(1, k)
    per_run = Fraction(1, k * s)
    transitions: list[tuple[str, str, str, Fraction]] = []
    for i in range(n):
        for a in nfa.alphabet:
            transitions.append((spine[i], a, spine[i + 1], letter))
            transitions.append((lanes[i], a, lanes[i + 1], letter))
            for q in ordered:
                succ = nfa.successors(q, a)
                for t in succ:
                    transitions.append((run_state(i, q), a, run_state(i + 1, t), per_run))
                overflow = letter * (1 - Fraction(len(succ), s))
                if overflow:
                    transitions.append((run_state(i, q), a, lanes[i + 1], overflow))
    flag = Fraction(1, s**n)
    transitions.append((spine[n], "b", "eow", flag))
    if flag != 1:
        transitions.append((spine[n], "rej", "eow", 1 - flag))
    transitions.append((lanes[n], "rej", "eow", ONE))
    for q in ordered:
        verdict = "acc" if q in nfa.accepting else "rej"
        transitions.append((run_state(n, q), verdict, "eow", ONE))
    lmc = Lmc.from_transitions(
        states,
        tuple(nfa.alphabet) + RESERVED_LABELS,
        transitions,
        {"eow": ONE},
    )
    gap = Fraction(total_accepting_runs(nfa, n), k**n * s**n)
    return ReductionOutput(
        lmc=lmc,
        pi1=InitialDistribution.dirac(lmc, spine[0]),
        pi2=InitialDistribution.dirac(lmc, run_state(0, nfa.initial)),
        kind="nfa",
        params={"word_length": n, "alphabet_size": k, "state_count": s},
        baseline_gap=gap,
    )


def count_from_distance(
    baseline_gap: Fraction,
    distance: Fraction,
    word_length: int,
    alphabet_size: int,
    state_count: int,
) -> int:
    """Recover |L ∩ Σ^n| from a distance (estimate) of an NFA instance.

    Inverts the reduction identity and rounds to the nearest integer; the
    rounding is rejected unless the estimate lands within 1/3 of a count
    unit, so an estimator certified to within 1/(4 k^n s^n) always succeeds
    and never silently returns a wrong count.
    """
    if word_length < 1 or alphabet_size < 1 or state_count < 1:
        raise DomainError("word length, alphabet size and state count must be positive")
    baseline_gap = as_fraction(baseline_gap, "baseline gap")
    distance = as_fraction(distance, "distance")
    unit = Fraction(1, alphabet_size**word_length * state_count**word_length)
    exact = alphabet_size**word_length - (distance - baseline_gap) / unit
    count = math.floor(exact + Fraction(1, 2))
    if abs(count - exact) > Fraction(1, 3):
        raise DomainError(
            f"distance estimate is {abs(count - exact)} count units away from an "
            f"integer; it is not accurate enough to certify a word count"
        )
    if not 0 <= count <= alphabet_size**word_length:
        raise DomainError(
            f"recovered count {count} is outside [0, {alphabet_size**word_length}]; "
            f"the inputs do not come from a consistent instance"
        )
    return count


def _solve_linear(matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> list[Fraction]:
    """Solve matrix @ x = rhs exactly by Gaussian elimination."""
    n = len(rhs)
    aug = [list(row) + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise DomainError("linear system is singular")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                factor = aug[r][col]
                aug[r] = [v - factor * w for v, w in zip(aug[r], aug[col])]
    return [aug[i][n] for i in range(n)]


def pa_to_lmc(pa: Pa) -> ReductionOutput:
    """Encode the majority-acceptance question as a distance instance.

    The first start idles in a fresh state, emitting random letters slowly
    and flagging half its stopping mass with ``b``; the second simulates the
    automaton at matching letter rates and reports ``acc`` or ``rej``.  Each
    word w accepted with probability above 1/2 pushes the distance strictly
    above the returned ``bound``; if no such word exists the distance equals
    ``bound`` exactly.  The bound itself is one exact linear solve (total
    ``acc`` mass of the second start), not an enumeration.
    """
    _check_reserved(pa.alphabet)
    k = len(pa.alphabet)
    s = len(pa.states)
    taken = set(pa.states)

    def fresh(base: str) -> str:
        name = base
        while name in taken:
            name += "'"
        taken.add(name)
        return name

    start = fresh("start")
    sink = fresh("eow")
    crawl = Fraction(1, 2 * k)
    quarter = Fraction(1, 4)
    half = Fraction(1, 2)
    transitions: list[tuple[str, str, str, Fraction]] = []
    for a in pa.alphabet:
        transitions.append((start, a, start, crawl))
    transitions.append((start, "b", sink, quarter))
    transitions.append((start, "acc", sink, quarter))
    for li, a in enumerate(pa.alphabet):
        mat = pa.matrices[li]
        for i, src in enumerate(pa.states):
            for j, tgt in enumerate(pa.states):
                if mat[i][j]:
                    transitions.append((src, a, tgt, mat[i][j] * crawl))
    for q in pa.states:
        verdict = "acc" if q in pa.accepting else "rej"
        transitions.append((q, verdict, sink, half))
    lmc = Lmc.from_transitions(
        (start,) + pa.states + (sink,),
        tuple(pa.alphabet) + RESERVED_LABELS,
        transitions,
        {sink: ONE},
    )
    pi1 = InitialDistribution.dirac(lmc, start)
    pi2 = InitialDistribution.from_map(
        lmc, {q: w for q, w in zip(pa.states, pa.initial) if w}
    )
    # Total ``acc`` mass of the second start: x solves (I - sum_a M(a)/(2k)) x = chi_F / 2.
    system = [
        [
            (ONE if i == j else ZERO)
            - sum((mat[i][j] for mat in pa.matrices), ZERO) * crawl
            for j in range(s)
        ]
        for i in range(s)
    ]
    rhs = [half * flag for flag in pa.accepting_vector]
    x = _solve_linear(system, rhs)
    acc_mass = sum((w * xi for w, xi in zip(pa.initial, x)), ZERO)
    return ReductionOutput(
        lmc=lmc,
        pi1=pi1,
        pi2=pi2,
        kind="pa",
        params={"alphabet_size": k, "state_count": s},
        bound=1 - acc_mass,
    )
