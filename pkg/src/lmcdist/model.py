"""Labelled Markov chains over exact rationals.

A chain is a finite state set, a finite alphabet, one transition matrix per
label, and a per-state end-of-word probability.  Started from an initial
distribution it emits a label and moves, or stops; that induces a probability
distribution on finite words, which is the object everything else in this
package analyses.

Contents:

* ``Lmc`` and ``InitialDistribution`` -- immutable model types.
* ``validate`` -- semantic invariant violations, returned as data.
* ``word_probability`` -- exact probability of a single word.
* ``is_acyclic`` / ``max_support_length`` -- shape of the word support.
* ``tail_mass`` -- exact probability of emitting a word longer than n.
* ``disjoint_union`` -- embed two chains in one state space so that a single
  analysis can compare their induced distributions.

Probabilities are ``fractions.Fraction`` throughout; floats are rejected so
that no silent rounding can creep in.  All model types are frozen and safe to
share between threads.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .errors import DomainError

ZERO = Fraction(0)
ONE = Fraction(1)

#: A dense square matrix of exact probabilities.
Matrix = tuple[tuple[Fraction, ...], ...]

#: A word is any sequence of labels.
Word = Sequence[str]

#: Sparse row form: for each source state, the (target, probability) pairs
#: with a nonzero probability.
SparseRows = tuple[tuple[tuple[int, Fraction], ...], ...]


def as_fraction(value: Fraction | int, what: str = "value") -> Fraction:
    """Coerce ints to Fraction; reject floats and anything else inexact."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    raise DomainError(
        f"{what} must be an exact rational (Fraction or int), got {type(value).__name__}"
    )


def _freeze_matrix(mat, size: int, label: str) -> Matrix:
    rows = tuple(mat)
    if len(rows) != size:
        raise DomainError(f"matrix for label {label!r} has {len(rows)} rows, expected {size}")
    out = []
    for row in rows:
        row = tuple(as_fraction(p, f"matrix entry for label {label!r}") for p in row)
        if len(row) != size:
            raise DomainError(f"matrix for label {label!r} has a row of width {len(row)}, expected {size}")
        out.append(row)
    return tuple(out)


@dataclass(frozen=True)
class Lmc:
    """A labelled Markov chain.

    ``matrices`` holds one |Q| x |Q| transition matrix per label, aligned with
    ``alphabet``; ``eow`` is the per-state probability of stopping (ending the
    word).  Construction checks shape only -- semantically broken models are
    representable on purpose so that :func:`validate` can report their
    violations as data.
    """

    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    matrices: tuple[Matrix, ...]
    eow: tuple[Fraction, ...]

    def __post_init__(self):
        states = tuple(self.states)
        alphabet = tuple(self.alphabet)
        if not states:
            raise DomainError("a chain needs at least one state")
        if len(set(states)) != len(states):
            raise DomainError("state names must be unique")
        if len(set(alphabet)) != len(alphabet):
            raise DomainError("labels must be unique")
        n = len(states)
        mats = tuple(self.matrices)
        if len(mats) != len(alphabet):
            raise DomainError(f"got {len(mats)} matrices for {len(alphabet)} labels")
        mats = tuple(_freeze_matrix(m, n, a) for m, a in zip(mats, alphabet))
        eow = tuple(as_fraction(e, "end-of-word probability") for e in self.eow)
        if len(eow) != n:
            raise DomainError(f"end-of-word vector has length {len(eow)}, expected {n}")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "eow", eow)

    # -- builders -----------------------------------------------------------

    @classmethod
    def from_transitions(
        cls,
        states: Sequence[str],
        alphabet: Sequence[str],
        transitions: Iterable[tuple[str, str, str, Fraction | int]],
        eow: Mapping[str, Fraction | int],
    ) -> "Lmc":
        """Build a chain from (source, label, target, probability) records.

        States absent from ``eow`` get end-of-word probability 0.  Duplicate
        (source, label, target) records are rejected rather than summed.
        """
        states = tuple(states)
        alphabet = tuple(alphabet)
        sidx = {s: i for i, s in enumerate(states)}
        lidx = {a: i for i, a in enumerate(alphabet)}
        if len(sidx) != len(states):
            raise DomainError("state names must be unique")
        if len(lidx) != len(alphabet):
            raise DomainError("labels must be unique")
        n = len(states)
        grids = [[[ZERO] * n for _ in range(n)] for _ in alphabet]
        seen: set[tuple[str, str, str]] = set()
        for src, label, tgt, prob in transitions:
            if src not in sidx:
                raise DomainError(f"transition source {src!r} is not a declared state")
            if tgt not in sidx:
                raise DomainError(f"transition target {tgt!r} is not a declared state")
            if label not in lidx:
                raise DomainError(f"transition label {label!r} is not in the alphabet")
            key = (src, label, tgt)
            if key in seen:
                raise DomainError(f"duplicate transition {src!r} --{label!r}--> {tgt!r}")
            seen.add(key)
            grids[lidx[label]][sidx[src]][sidx[tgt]] = as_fraction(prob, "transition probability")
        for state in eow:
            if state not in sidx:
                raise DomainError(f"end-of-word entry names unknown state {state!r}")
        eow_vec = tuple(as_fraction(eow.get(s, ZERO), "end-of-word probability") for s in states)
        mats = tuple(tuple(tuple(row) for row in grid) for grid in grids)
        return cls(states, alphabet, mats, eow_vec)

    # -- lookups ------------------------------------------------------------

    @cached_property
    def state_index(self) -> Mapping[str, int]:
        return {s: i for i, s in enumerate(self.states)}

    @cached_property
    def label_index(self) -> Mapping[str, int]:
        return {a: i for i, a in enumerate(self.alphabet)}

    @property
    def n_states(self) -> int:
        return len(self.states)

    def matrix(self, label: str) -> Matrix:
        try:
            return self.matrices[self.label_index[label]]
        except KeyError:
            raise DomainError(f"label {label!r} is not in the alphabet") from None

    def transition_records(self) -> list[tuple[str, str, str, Fraction]]:
        """All nonzero transitions as (source, label, target, probability)."""
        out = []
        for li, label in enumerate(self.alphabet):
            for i, row in enumerate(self.matrices[li]):
                for j, p in enumerate(row):
                    if p:
                        out.append((self.states[i], label, self.states[j], p))
        return out

    # -- cached sparse structure (positive entries only) ---------------------

    @cached_property
    def sparse_rows(self) -> tuple[SparseRows, ...]:
        """Per label, per source state: nonzero (target, probability) pairs."""
        return tuple(
            tuple(
                tuple((j, p) for j, p in enumerate(row) if p)
                for row in mat
            )
            for mat in self.matrices
        )

    @cached_property
    def sparse_cols(self) -> tuple[SparseRows, ...]:
        """Per label, per target state: nonzero (source, probability) pairs."""
        out = []
        for mat in self.matrices:
            cols: list[list[tuple[int, Fraction]]] = [[] for _ in self.states]
            for i, row in enumerate(mat):
                for j, p in enumerate(row):
                    if p:
                        cols[j].append((i, p))
            out.append(tuple(tuple(c) for c in cols))
        return tuple(out)

    @cached_property
    def combined_rows(self) -> SparseRows:
        """Sparse rows of the label-summed transition matrix."""
        n = self.n_states
        sums = [[ZERO] * n for _ in range(n)]
        for mat in self.matrices:
            for i, row in enumerate(mat):
                for j, p in enumerate(row):
                    if p:
                        sums[i][j] += p
        return tuple(
            tuple((j, p) for j, p in enumerate(row) if p)
            for row in sums
        )

    @cached_property
    def successors(self) -> tuple[tuple[int, ...], ...]:
        """Per state: targets reachable by one positive-probability step."""
        out = []
        for i in range(self.n_states):
            targets: set[int] = set()
            for mat in self.matrices:
                for j, p in enumerate(mat[i]):
                    if p > 0:
                        targets.add(j)
            out.append(tuple(sorted(targets)))
        return tuple(out)


@dataclass(frozen=True)
class InitialDistribution:
    """An exact probability distribution over the states of a chain.

    Unlike :class:`Lmc`, construction enforces the invariants (entries in
    [0, 1], total exactly 1): a broken start distribution is never useful.
    """

    weights: tuple[Fraction, ...]

    def __post_init__(self):
        weights = tuple(as_fraction(w, "initial weight") for w in self.weights)
        if not weights:
            raise DomainError("an initial distribution needs at least one state")
        for i, w in enumerate(weights):
            if not (0 <= w <= 1):
                raise DomainError(f"initial weight at position {i} is {w}, outside [0, 1]")
        total = sum(weights)
        if total != 1:
            raise DomainError(f"initial weights sum to {total}, expected exactly 1")
        object.__setattr__(self, "weights", weights)

    @classmethod
    def dirac(cls, lmc: Lmc, state: str) -> "InitialDistribution":
        """All mass on one state."""
        try:
            idx = lmc.state_index[state]
        except KeyError:
            raise DomainError(f"state {state!r} is not in the chain") from None
        return cls(tuple(ONE if i == idx else ZERO for i in range(lmc.n_states)))

    @classmethod
    def from_map(cls, lmc: Lmc, weights: Mapping[str, Fraction | int]) -> "InitialDistribution":
        """Build from a state->weight map; omitted states get weight 0."""
        for state in weights:
            if state not in lmc.state_index:
                raise DomainError(f"initial distribution names unknown state {state!r}")
        return cls(tuple(as_fraction(weights.get(s, ZERO), "initial weight") for s in lmc.states))

    def support(self) -> tuple[int, ...]:
        return tuple(i for i, w in enumerate(self.weights) if w > 0)


# -- shared sparse-vector plumbing (used by the analysis modules too) --------


def sparsify(weights: Sequence[Fraction]) -> dict[int, Fraction]:
    return {i: w for i, w in enumerate(weights) if w}


def advance(vec: dict[int, Fraction], rows: SparseRows) -> dict[int, Fraction]:
    """One step of vector-times-matrix in sparse form."""
    out: dict[int, Fraction] = {}
    for i, x in vec.items():
        for j, p in rows[i]:
            prev = out.get(j)
            out[j] = x * p if prev is None else prev + x * p
    # Sums of positive terms cannot cancel, but keep corrupt models safe:
    return {j: v for j, v in out.items() if v}


def stop_mass(vec: dict[int, Fraction], eow: Sequence[Fraction]) -> Fraction:
    """Probability of stopping right now, given the sparse prefix vector."""
    total = ZERO
    for i, x in vec.items():
        e = eow[i]
        if e:
            total += x * e
    return total


def check_distribution(lmc: Lmc, pi: InitialDistribution, name: str = "initial distribution") -> None:
    if len(pi.weights) != lmc.n_states:
        raise DomainError(
            f"{name} has {len(pi.weights)} weights but the chain has {lmc.n_states} states"
        )


# -- operations ---------------------------------------------------------------


def validate(lmc: Lmc) -> list[str]:
    """Check the semantic invariants; return human-readable violations.

    Checks, in order: every probability lies in [0, 1]; at every state the
    end-of-word probability plus all outgoing transition probabilities sums to
    exactly 1; every state has a positive-probability path to some state that
    can end the word.  An empty result means the chain is a well-defined
    probability distribution over finite words.
    """
    problems: list[str] = []
    for li, label in enumerate(lmc.alphabet):
        for i, row in enumerate(lmc.matrices[li]):
            for j, p in enumerate(row):
                if not (0 <= p <= 1):
                    problems.append(
                        f"transition {lmc.states[i]} --{label}--> {lmc.states[j]} "
                        f"has probability {p}, outside [0, 1]"
                    )
    for i, e in enumerate(lmc.eow):
        if not (0 <= e <= 1):
            problems.append(
                f"end-of-word probability at state {lmc.states[i]} is {e}, outside [0, 1]"
            )
    for i in range(lmc.n_states):
        total = lmc.eow[i]
        for mat in lmc.matrices:
            total += sum(mat[i], ZERO)
        if total != 1:
            problems.append(
                f"outgoing probability at state {lmc.states[i]} sums to {total}, expected 1"
            )
    # Backward reachability from the states that can stop.
    can_stop = {i for i, e in enumerate(lmc.eow) if e > 0}
    preds: list[set[int]] = [set() for _ in lmc.states]
    for i, targets in enumerate(lmc.successors):
        for j in targets:
            preds[j].add(i)
    reached = set(can_stop)
    frontier = deque(can_stop)
    while frontier:
        j = frontier.popleft()
        for i in preds[j]:
            if i not in reached:
                reached.add(i)
                frontier.append(i)
    for i in range(lmc.n_states):
        if i not in reached:
            problems.append(
                f"state {lmc.states[i]} has no positive-probability path to a state "
                f"that can end the word"
            )
    return problems


def word_probability(lmc: Lmc, pi: InitialDistribution, word: Word) -> Fraction:
    """Exact probability that the chain emits exactly ``word`` and stops."""
    check_distribution(lmc, pi)
    vec = sparsify(pi.weights)
    for label in word:
        li = lmc.label_index.get(label)
        if li is None:
            raise DomainError(f"label {label!r} is not in the alphabet")
        vec = advance(vec, lmc.sparse_rows[li])
        if not vec:
            return ZERO
    return stop_mass(vec, lmc.eow)


def _topological_order(lmc: Lmc) -> list[int] | None:
    """Topological order of the positive-transition graph, or None if cyclic."""
    n = lmc.n_states
    indegree = [0] * n
    for targets in lmc.successors:
        for j in targets:
            indegree[j] += 1
    ready = deque(i for i in range(n) if indegree[i] == 0)
    order: list[int] = []
    while ready:
        i = ready.popleft()
        order.append(i)
        for j in lmc.successors[i]:
            indegree[j] -= 1
            if indegree[j] == 0:
                ready.append(j)
    return order if len(order) == n else None


def is_acyclic(lmc: Lmc) -> bool:
    """True when no positive-probability cycle exists (self-loops included)."""
    return _topological_order(lmc) is not None


def support_lengths(lmc: Lmc) -> list[int | None]:
    """Per state: length of the longest word emitted with positive probability
    when starting there, or None if no word has positive probability.

    Requires an acyclic chain.
    """
    order = _topological_order(lmc)
    if order is None:
        raise DomainError("chain has a positive-probability cycle; word support is unbounded")
    longest: list[int | None] = [None] * lmc.n_states
    for i in reversed(order):
        best: int | None = 0 if lmc.eow[i] > 0 else None
        for j in lmc.successors[i]:
            lj = longest[j]
            if lj is not None and (best is None or lj + 1 > best):
                best = lj + 1
        longest[i] = best
    return longest


def max_support_length(lmc: Lmc) -> int:
    """Length of the longest positive-probability word from any state.

    Requires an acyclic chain; 0 when only the empty word (or nothing) is
    emitted.
    """
    finite = [x for x in support_lengths(lmc) if x is not None]
    return max(finite, default=0)


def tail_mass(lmc: Lmc, pi: InitialDistribution, n: int) -> Fraction:
    """Exact probability of emitting a word strictly longer than ``n``."""
    check_distribution(lmc, pi)
    if n < 0:
        raise DomainError(f"length cutoff must be nonnegative, got {n}")
    vec = sparsify(pi.weights)
    stopped = stop_mass(vec, lmc.eow)
    for _ in range(n):
        vec = advance(vec, lmc.combined_rows)
        if not vec:
            break
        stopped += stop_mass(vec, lmc.eow)
    return ONE - stopped


def disjoint_union(
    m1: Lmc,
    pi1: InitialDistribution,
    m2: Lmc,
    pi2: InitialDistribution,
) -> tuple[Lmc, InitialDistribution, InitialDistribution]:
    """Embed two same-alphabet chains into one block-diagonal chain.

    Returns the union chain and both initial distributions lifted to the
    combined state space, so distances and equivalence between the two
    originals can be computed by any single-chain analysis.  State names are
    kept when the two name sets are disjoint; otherwise every state is renamed
    with a ``1:`` / ``2:`` prefix.
    """
    check_distribution(m1, pi1, "first initial distribution")
    check_distribution(m2, pi2, "second initial distribution")
    if set(m1.alphabet) != set(m2.alphabet):
        raise DomainError(
            f"alphabets differ: {sorted(m1.alphabet)} vs {sorted(m2.alphabet)}"
        )
    if set(m1.states) & set(m2.states):
        names = tuple(f"1:{s}" for s in m1.states) + tuple(f"2:{s}" for s in m2.states)
    else:
        names = m1.states + m2.states
    n1, n2 = m1.n_states, m2.n_states
    zeros1 = (ZERO,) * n1
    zeros2 = (ZERO,) * n2
    mats = []
    for label in m1.alphabet:
        a = m1.matrix(label)
        b = m2.matrix(label)
        rows = [row + zeros2 for row in a] + [zeros1 + row for row in b]
        mats.append(tuple(rows))
    union = Lmc(names, m1.alphabet, tuple(mats), m1.eow + m2.eow)
    lifted1 = InitialDistribution(pi1.weights + zeros2)
    lifted2 = InitialDistribution(zeros1 + pi2.weights)
    return union, lifted1, lifted2
