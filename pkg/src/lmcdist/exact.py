"""Exact distance analysis for acyclic chains, plus equivalence for all chains.

The total variation distance between the word distributions of two starting
points is half the sum of |p1(w) - p2(w)| over all words; equivalently it is
the advantage p1(W) - p2(W) of the event W = {w : p1(w) >= p2(w)} (ties are
put into W throughout this package).  For acyclic chains the support is
finite, so these quantities are computed exactly by depth-first enumeration in
alphabet order, pruning prefixes that are unreachable under both starts.

Also here:

* power-sum distances (sum of |p1 - p2|^k),
* a comparison of the distance against a rational threshold decided by a pure
  big-integer inequality, returned with its certificate integers,
* distribution equivalence by linear-algebraic closure (works for cyclic
  chains too, in polynomial time),
* an exhaustive-subset oracle used to cross-check the enumeration.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from itertools import chain as _chain
from typing import Iterator, Sequence

from .errors import BudgetExceededError, DomainError, OracleInfeasibleError
from .model import (
    ZERO,
    InitialDistribution,
    Lmc,
    Word,
    advance,
    check_distribution,
    is_acyclic,
    sparsify,
    stop_mass,
    support_lengths,
)

#: Default cap on enumeration-tree nodes (prefixes visited).
DEFAULT_NODE_BUDGET = 10**7

#: Witness word lists larger than this are summarized by count/mass only.
WITNESS_WORD_CAP = 10**4


@dataclass(frozen=True)
class WitnessSummary:
    """The event W = {support words with p1(w) >= p2(w)} in summary form.

    ``words`` is the explicit list (in enumeration order) when the event has
    at most ``WITNESS_WORD_CAP`` words, else None.
    """

    word_count: int
    mass_1: Fraction
    mass_2: Fraction
    words: tuple[tuple[str, ...], ...] | None


@dataclass(frozen=True)
class DistanceReport:
    """Exact distance plus the maximizing event that realizes it."""

    distance: Fraction
    witness: WitnessSummary
    enumerated_words: int


@dataclass(frozen=True)
class ThresholdCertificate:
    """Outcome of an exact integer comparison of the distance with a threshold.

    The decision holds iff ``lhs_integer >= rhs_integer``; both integers are
    exact functions of the inputs (lhs equals the distance and rhs the
    threshold, both scaled by twice ``denominator_product ** (support_length
    + 2)``, with 1 added to rhs for a strict comparison), so the certificate
    can be re-verified independently.
    """

    decision: bool
    lhs_integer: int
    rhs_integer: int
    denominator_product: int
    support_length: int


def require_acyclic(lmc: Lmc) -> None:
    if not is_acyclic(lmc):
        raise DomainError(
            "chain has a positive-probability cycle; exact enumeration needs an acyclic chain"
        )


def _support_words(
    lmc: Lmc,
    pi1: InitialDistribution,
    pi2: InitialDistribution,
    budget: int,
    max_len: int | None = None,
) -> Iterator[tuple[tuple[str, ...], Fraction, Fraction]]:
    """Depth-first enumeration of words with positive probability under either
    start.  Yields (word, p1, p2); prunes subtrees where both prefix vectors
    vanish; every visited prefix counts against ``budget``.
    """
    if budget < 1:
        raise DomainError(f"node budget must be positive, got {budget}")
    alphabet = lmc.alphabet
    nlabels = len(alphabet)
    rows = lmc.sparse_rows
    eow = lmc.eow
    v1 = sparsify(pi1.weights)
    v2 = sparsify(pi2.weights)
    nodes = 1
    p1 = stop_mass(v1, eow)
    p2 = stop_mass(v2, eow)
    if p1 or p2:
        yield (), p1, p2
    prefix: list[str] = []
    # Frame: [vector under pi1, vector under pi2, next label index to try].
    stack: list[list] = [[v1, v2, 0]]
    while stack:
        frame = stack[-1]
        li = frame[2]
        if li == nlabels or (max_len is not None and len(prefix) == max_len and li == 0):
            stack.pop()
            if prefix:
                prefix.pop()
            continue
        frame[2] = li + 1
        n1 = advance(frame[0], rows[li])
        n2 = advance(frame[1], rows[li])
        if not n1 and not n2:
            continue
        nodes += 1
        if nodes > budget:
            raise BudgetExceededError(
                f"enumeration exceeded the node budget of {budget}",
                nodes_visited=nodes,
            )
        prefix.append(alphabet[li])
        stack.append([n1, n2, 0])
        p1 = stop_mass(n1, eow)
        p2 = stop_mass(n2, eow)
        if p1 or p2:
            yield tuple(prefix), p1, p2


def tv_distance_acyclic(
    lmc: Lmc,
    pi1: InitialDistribution,
    pi2: InitialDistribution,
    budget: int = DEFAULT_NODE_BUDGET,
) -> DistanceReport:
    """Exact total variation distance between the two word distributions.

    Enumerates the full (finite) support, so the chain must be acyclic.  The
    report carries the maximizing event W = {w : p1(w) >= p2(w)} restricted to
    support words; its masses satisfy distance = mass_1 - mass_2 exactly.
    """
    require_acyclic(lmc)
    check_distribution(lmc, pi1, "first initial distribution")
    check_distribution(lmc, pi2, "second initial distribution")
    gap_total = ZERO
    count = 0
    mass_1 = ZERO
    mass_2 = ZERO
    words: list[tuple[str, ...]] | None = []
    enumerated = 0
    for word, p1, p2 in _support_words(lmc, pi1, pi2, budget):
        enumerated += 1
        if p1 >= p2:
            gap_total += p1 - p2
            count += 1
            mass_1 += p1
            mass_2 += p2
            if words is not None:
                if count <= WITNESS_WORD_CAP:
                    words.append(word)
                else:
                    words = None
        else:
            gap_total += p2 - p1
    witness = WitnessSummary(
        word_count=count,
        mass_1=mass_1,
        mass_2=mass_2,
        words=tuple(words) if words is not None else None,
    )
    return DistanceReport(distance=gap_total / 2, witness=witness, enumerated_words=enumerated)


def lk_distance_acyclic(
    lmc: Lmc,
    pi1: InitialDistribution,
    pi2: InitialDistribution,
    k: int,
    budget: int = DEFAULT_NODE_BUDGET,
) -> Fraction:
    """Exact k-th power-sum distance: sum over words of |p1(w) - p2(w)|^k.

    For k = 1 this is twice the total variation distance.
    """
    if not isinstance(k, int) or k < 1:
        raise DomainError(f"exponent must be an integer >= 1, got {k!r}")
    require_acyclic(lmc)
    check_distribution(lmc, pi1, "first initial distribution")
    check_distribution(lmc, pi2, "second initial distribution")
    total = ZERO
    for _, p1, p2 in _support_words(lmc, pi1, pi2, budget):
        gap = p1 - p2 if p1 >= p2 else p2 - p1
        if gap:
            total += gap**k
    return total


def _support_length_from(lmc: Lmc, starts: Sequence[int]) -> int:
    """Longest positive-probability word when starting from any of ``starts``."""
    lengths = support_lengths(lmc)
    finite = [lengths[i] for i in starts if lengths[i] is not None]
    return max(finite, default=0)


def threshold_decide_acyclic(
    lmc: Lmc,
    pi1: InitialDistribution,
    pi2: InitialDistribution,
    tau: Fraction | int,
    strict: bool = True,
    budget: int = DEFAULT_NODE_BUDGET,
) -> ThresholdCertificate:
    """Decide distance > tau (strict) or >= tau by an exact integer inequality.

    Let D be the product of every denominator appearing in the two starting
    distributions, the transition matrices, the end-of-word vector and tau,
    and let n be the length of the longest support word.  Scaling each word's
    probability gap to the integer D**(n+2-|w|) |(p1 - p2) applied to w| and
    summing gives an integer equal to 2 D**(n+2) distance; comparing it with
    2 D**(n+2) tau (plus 1 when strict) decides the question with no division
    at all.  Both sides are returned so the decision can be audited.
    """
    require_acyclic(lmc)
    check_distribution(lmc, pi1, "first initial distribution")
    check_distribution(lmc, pi2, "second initial distribution")
    tau = Fraction(tau)
    if not (0 <= tau <= 1):
        raise DomainError(f"threshold must lie in [0, 1], got {tau}")
    if budget < 1:
        raise DomainError(f"node budget must be positive, got {budget}")

    entries = list(
        _chain(
            pi1.weights,
            pi2.weights,
            lmc.eow,
            (p for mat in lmc.matrices for row in mat for p in row),
            (tau,),
        )
    )
    denom_product = 1
    for f in entries:
        denom_product *= f.denominator
    starts = sorted(set(pi1.support()) | set(pi2.support()))
    n = _support_length_from(lmc, starts)

    def scaled_int(x: Fraction) -> int:
        scaled = x * denom_product
        assert scaled.denominator == 1
        return scaled.numerator

    int_eow = [scaled_int(e) for e in lmc.eow]
    int_rows = tuple(
        tuple(
            tuple((j, scaled_int(p)) for j, p in row_pairs)
            for row_pairs in label_rows
        )
        for label_rows in lmc.sparse_rows
    )
    diff0 = {
        i: scaled_int(pi1.weights[i] - pi2.weights[i])
        for i in range(lmc.n_states)
        if pi1.weights[i] != pi2.weights[i]
    }
    powers = [denom_product**j for j in range(n + 1)]

    def eow_dot(vec: dict[int, int]) -> int:
        return sum(x * int_eow[i] for i, x in vec.items() if int_eow[i])

    def step(vec: dict[int, int], rows) -> dict[int, int]:
        out: dict[int, int] = {}
        for i, x in vec.items():
            for j, p in rows[i]:
                out[j] = out.get(j, 0) + x * p
        return {j: v for j, v in out.items() if v}

    lhs = abs(eow_dot(diff0)) * powers[n]
    nodes = 1
    nlabels = len(lmc.alphabet)
    stack: list[list] = [[diff0, 0, 0]]  # [vector, depth, next label]
    while stack:
        frame = stack[-1]
        depth, li = frame[1], frame[2]
        if li == nlabels or depth == n:
            stack.pop()
            continue
        frame[2] = li + 1
        child = step(frame[0], int_rows[li])
        if not child:
            continue
        nodes += 1
        if nodes > budget:
            raise BudgetExceededError(
                f"enumeration exceeded the node budget of {budget}",
                nodes_visited=nodes,
            )
        contribution = abs(eow_dot(child))
        if contribution:
            lhs += contribution * powers[n - depth - 1]
        stack.append([child, depth + 1, 0])

    rhs_fraction = 2 * tau * Fraction(denom_product) ** (n + 2)
    assert rhs_fraction.denominator == 1
    rhs = rhs_fraction.numerator + (1 if strict else 0)
    return ThresholdCertificate(
        decision=lhs >= rhs,
        lhs_integer=lhs,
        rhs_integer=rhs,
        denominator_product=denom_product,
        support_length=n,
    )


def are_equivalent(lmc: Lmc, pi1: InitialDistribution, pi2: InitialDistribution) -> bool:
    """True when both starts give every word identical probability.

    Works for cyclic chains: the set of prefix-difference vectors spans a
    subspace of dimension at most |Q|, so closing a basis of it under every
    transition matrix and checking each basis vector against the end-of-word
    vector decides equivalence in polynomial time, with exact arithmetic.
    """
    check_distribution(lmc, pi1, "first initial distribution")
    check_distribution(lmc, pi2, "second initial distribution")
    n = lmc.n_states
    eow = lmc.eow

    def eta_dot(v: list[Fraction]) -> Fraction:
        return sum((x * e for x, e in zip(v, eow) if x and e), ZERO)

    def times_matrix(v: list[Fraction], rows) -> list[Fraction]:
        out = [ZERO] * n
        for i, x in enumerate(v):
            if x:
                for j, p in rows[i]:
                    out[j] += x * p
        return out

    basis: list[tuple[int, list[Fraction]]] = []  # (pivot index, pivot-normalized vector)
    queue: deque[list[Fraction]] = deque()
    queue.append([a - b for a, b in zip(pi1.weights, pi2.weights)])
    while queue:
        v = queue.popleft()
        for pivot, b in basis:
            c = v[pivot]
            if c:
                v = [x - c * y for x, y in zip(v, b)]
        pivot = next((i for i, x in enumerate(v) if x), None)
        if pivot is None:
            continue
        if eta_dot(v) != 0:
            return False
        inv = 1 / v[pivot]
        v = [x * inv for x in v]
        basis.append((pivot, v))
        if len(basis) > n:  # cannot happen: dimensions are bounded by |Q|
            raise AssertionError("independent set exceeded the space dimension")
        for rows in lmc.sparse_rows:
            queue.append(times_matrix(v, rows))
    return True


def brute_force_best_event(
    lmc: Lmc,
    pi1: InitialDistribution,
    pi2: InitialDistribution,
    max_len: int,
    support_cap: int = 20,
    budget: int = 10**6,
) -> tuple[tuple[tuple[str, ...], ...], Fraction]:
    """Maximize p1(W) - p2(W) over every subset of the length-bounded support.

    An independent oracle for the enumeration-based distance: it inspects all
    2^m subsets of the at-most-``support_cap`` support words of length at most
    ``max_len``.  Among maximizing subsets it returns the largest, which is
    exactly the canonical tie convention (every word with p1 >= p2 included).
    """
    if max_len < 0:
        raise DomainError(f"length cutoff must be nonnegative, got {max_len}")
    found: list[tuple[tuple[str, ...], Fraction]] = []
    for word, p1, p2 in _support_words(lmc, pi1, pi2, budget, max_len=max_len):
        found.append((word, p1 - p2))
        if len(found) > support_cap:
            raise OracleInfeasibleError(
                f"more than {support_cap} support words of length <= {max_len}; "
                f"the exhaustive-subset oracle only handles tiny supports"
            )
    m = len(found)
    best_value = ZERO
    best_size = 0
    best_mask = 0
    value = ZERO
    size = 0
    mask = 0
    # Walk all subsets in Gray-code order so each step flips a single word.
    for g in range(1, 1 << m):
        bit = (g & -g).bit_length() - 1
        mask ^= 1 << bit
        if (mask >> bit) & 1:
            value += found[bit][1]
            size += 1
        else:
            value -= found[bit][1]
            size -= 1
        if value > best_value or (value == best_value and size > best_size):
            best_value, best_size, best_mask = value, size, mask
    chosen = tuple(word for i, (word, _) in enumerate(found) if (best_mask >> i) & 1)
    return chosen, best_value
