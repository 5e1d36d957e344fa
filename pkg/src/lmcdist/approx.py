"""Approximate distance computation with certified error bounds.

Two estimators for the total variation distance between the word
distributions of two starting points:

* ``tv_sample_acyclic`` -- statistical: draw words from each distribution with
  an exact sampler and count how often the other distribution dominates.  The
  estimate is within epsilon of the distance with probability at least
  1 - delta when each side draws ``sample_count(epsilon, delta)`` words.

* ``tv_bounded`` -- deterministic: cut the support at a length where at most
  epsilon/4 of the mass remains (``length_bound``), enumerate all words up to
  that length, and classify each word by comparing the two probabilities
  computed in k-bit floating point with k chosen so each is within relative
  epsilon/8 of the truth.  The exact masses of the two classes then pin the
  distance to within epsilon/2, with no randomness and no cycle restriction.

Sampling uses exact dyadic-interval refinement against rational cumulative
weights, so sampled words follow the model distribution exactly -- the only
approximation in the statistical estimator is the finite sample size.  The
logarithms needed for sample sizes and fallback length bounds are certified
rational upper bounds (truncated series plus an explicit remainder term), so
every derived count errs on the safe side.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .errors import BudgetExceededError, DomainError, LengthExceededError
from .exact import DEFAULT_NODE_BUDGET, require_acyclic
from .floatk import FloatK, RoundedModel, precision_for
from .model import (
    ONE,
    ZERO,
    InitialDistribution,
    Lmc,
    advance,
    as_fraction,
    check_distribution,
    max_support_length,
    sparsify,
    stop_mass,
    word_probability,
)

#: Fixed default seed: identical invocations give identical results.
DEFAULT_SEED = 0

#: Series length for certified logarithm bounds (error well under 2**-60).
_LN_TERMS = 32


# -- certified logarithm upper bound ------------------------------------------


def _atanh_upper(t: Fraction, terms: int) -> Fraction:
    """Upper bound on atanh(t) for 0 <= t < 1.

    Partial sum of t + t^3/3 + t^5/5 + ... plus the exact geometric bound
    t^(2J+1) / ((2J+1)(1-t^2)) on the omitted tail.
    """
    acc = ZERO
    t2 = t * t
    power = t
    for j in range(terms):
        acc += power / (2 * j + 1)
        power *= t2
    return acc + power / ((2 * terms + 1) * (1 - t2))


def ln_upper(x: Fraction | int, terms: int = _LN_TERMS) -> Fraction:
    """A rational upper bound on the natural logarithm of x, for x >= 1.

    Splits off the power of two (bounding ln 2 from above by its own series)
    and expands the remainder around 1, where the series converges fast;
    truncation is always compensated by an explicit remainder bound, so the
    result is a true upper bound.
    """
    x = as_fraction(x, "logarithm argument")
    if x < 1:
        raise DomainError(f"logarithm bound requires an argument >= 1, got {x}")
    if x == 1:
        return ZERO
    num, den = x.numerator, x.denominator

    def at_least_pow2(t: int) -> bool:
        return num >= den << t if t >= 0 else num << -t >= den

    e = num.bit_length() - den.bit_length()
    if not at_least_pow2(e):
        e -= 1
    elif at_least_pow2(e + 1):
        e += 1
    reduced = x / (ONE * 2**e)  # in [1, 2)
    ln2_up = 2 * _atanh_upper(Fraction(1, 3), terms)
    t = (reduced - 1) / (reduced + 1)  # in [0, 1/3)
    return e * ln2_up + 2 * _atanh_upper(t, terms)


# -- exact sampling ------------------------------------------------------------


class BitStream:
    """A buffered stream of pseudo-random bits from a fixed, documented
    generator (Mersenne Twister), so seeded runs replay identically."""

    algorithm = "mt19937"

    __slots__ = ("seed", "_rng", "_buffer", "_available", "bits_consumed")

    def __init__(self, seed: int):
        self.seed = seed
        self._rng = random.Random(seed)
        self._buffer = 0
        self._available = 0
        self.bits_consumed = 0

    def bits(self, n: int) -> int:
        """The next n bits as an integer (most significant drawn first)."""
        while self._available < n:
            self._buffer = (self._buffer << 64) | self._rng.getrandbits(64)
            self._available += 64
        self._available -= n
        self.bits_consumed += n
        chunk = (self._buffer >> self._available) & ((1 << n) - 1)
        self._buffer &= (1 << self._available) - 1
        return chunk

    def bit(self) -> int:
        return self.bits(1)


def _choose(stream: BitStream, cum: list[int], total: int) -> int:
    """Pick bucket i with probability (cum[i+1] - cum[i]) / total, exactly.

    Draws bits to refine a dyadic interval until it fits inside one bucket of
    [0, 1).  The first draw takes ceil(log2(total)) bits at once (for
    power-of-two totals that already decides), then single bits.
    """
    if len(cum) == 2:
        return 0
    width = max(1, (total - 1).bit_length())
    a = stream.bits(width)
    scale = 1 << width
    while True:
        lo = a * total
        hi = lo + total
        for i in range(len(cum) - 1):
            upper = cum[i + 1] * scale
            if lo < upper:
                if hi <= upper:
                    return i
                break
        a = (a << 1) | stream.bit()
        scale <<= 1


class _Sampler:
    """Ancestral sampler for one (chain, start) pair with exact thresholds."""

    def __init__(self, lmc: Lmc, pi: InitialDistribution):
        check_distribution(lmc, pi)
        self.lmc = lmc
        # Initial-state table.
        self._init_states = [i for i, w in enumerate(pi.weights) if w > 0]
        self._init_cum, self._init_total = self._cumulative(
            [pi.weights[i] for i in self._init_states], "the initial distribution"
        )
        # Per-state outcome tables: None = stop, else (label, target).
        self._outcomes: list[list[tuple[str, int] | None]] = []
        self._cums: list[list[int]] = []
        self._totals: list[int] = []
        for i in range(lmc.n_states):
            outs: list[tuple[str, int] | None] = []
            probs: list[Fraction] = []
            if lmc.eow[i] > 0:
                outs.append(None)
                probs.append(lmc.eow[i])
            for li, label in enumerate(lmc.alphabet):
                for j, p in lmc.sparse_rows[li][i]:
                    if p > 0:
                        outs.append((label, j))
                        probs.append(p)
            cum, total = self._cumulative(probs, f"state {lmc.states[i]!r}")
            self._outcomes.append(outs)
            self._cums.append(cum)
            self._totals.append(total)

    @staticmethod
    def _cumulative(probs: list[Fraction], where: str) -> tuple[list[int], int]:
        if not probs:
            raise DomainError(f"cannot sample: {where} has no positive outcome")
        den = math.lcm(*(p.denominator for p in probs))
        cum = [0]
        for p in probs:
            cum.append(cum[-1] + p.numerator * (den // p.denominator))
        if cum[-1] != den:
            raise DomainError(
                f"cannot sample: probabilities at {where} sum to "
                f"{Fraction(cum[-1], den)}, expected 1"
            )
        return cum, den

    def draw(self, stream: BitStream, max_len: int) -> tuple[str, ...]:
        state = self._init_states[_choose(stream, self._init_cum, self._init_total)]
        word: list[str] = []
        while True:
            pick = self._outcomes[state][
                _choose(stream, self._cums[state], self._totals[state])
            ]
            if pick is None:
                return tuple(word)
            label, target = pick
            word.append(label)
            if len(word) > max_len:
                raise LengthExceededError(
                    f"trajectory exceeded {max_len} letters", prefix=tuple(word)
                )
            state = target


def sample_word(
    lmc: Lmc, pi: InitialDistribution, rng: BitStream, max_len: int
) -> tuple[str, ...]:
    """Draw one word from the chain's distribution, exactly.

    Walks the chain choosing each step by dyadic-interval refinement against
    the exact rational transition weights, so the returned word has exactly
    its model probability.  Raises ``LengthExceededError`` if the trajectory
    runs past ``max_len`` letters (cannot happen when ``max_len`` is at least
    the support length of an acyclic chain).
    """
    return _Sampler(lmc, pi).draw(rng, max_len)


def sample_count(epsilon: Fraction | int, delta: Fraction | int) -> int:
    """Samples per side for an (epsilon, delta) additive distance estimate.

    The smallest integer m with m >= (2 / epsilon^2) * ln(4 / delta), using a
    certified upper bound on the logarithm (over-approximation only increases
    m, preserving the guarantee).
    """
    epsilon = as_fraction(epsilon, "epsilon")
    delta = as_fraction(delta, "delta")
    if not 0 < epsilon <= 1:
        raise DomainError(f"epsilon must be in (0, 1], got {epsilon}")
    if not 0 < delta < 1:
        raise DomainError(f"delta must be in (0, 1), got {delta}")
    bound = 2 * ln_upper(4 / delta) / (epsilon * epsilon)
    return math.ceil(bound)


@dataclass(frozen=True)
class SampleEstimate:
    """A statistical distance estimate with everything needed to replay it.

    ``p_hat_1`` is the fraction of words drawn from the first distribution
    whose first-start probability is strictly below the second's; ``p_hat_2``
    the fraction of second-side draws where the first dominates (ties count).
    The estimate is 1 - p_hat_1 - p_hat_2.
    """

    estimate: Fraction
    p_hat_1: Fraction
    p_hat_2: Fraction
    samples_per_side: int
    epsilon: Fraction
    delta: Fraction
    seed: int
    rng_algorithm: str = BitStream.algorithm


def tv_sample_acyclic(
    lmc: Lmc,
    pi1: InitialDistribution,
    pi2: InitialDistribution,
    epsilon: Fraction | int,
    delta: Fraction | int,
    seed: int = DEFAULT_SEED,
) -> SampleEstimate:
    """Estimate the distance to within epsilon with confidence 1 - delta.

    Draws ``sample_count(epsilon, delta)`` words from each start with the
    exact sampler, classifies each sampled word by an exact comparison of its
    two probabilities, and combines the two empirical fractions.  One seeded
    bit stream drives both sides, so a fixed seed replays exactly.
    """
    require_acyclic(lmc)
    check_distribution(lmc, pi1, "first initial distribution")
    check_distribution(lmc, pi2, "second initial distribution")
    m = sample_count(epsilon, delta)
    horizon = max_support_length(lmc)
    stream = BitStream(seed)
    sampler1 = _Sampler(lmc, pi1)
    sampler2 = _Sampler(lmc, pi2)
    memo: dict[tuple[str, ...], tuple[Fraction, Fraction]] = {}

    def probs(word: tuple[str, ...]) -> tuple[Fraction, Fraction]:
        hit = memo.get(word)
        if hit is None:
            hit = (word_probability(lmc, pi1, word), word_probability(lmc, pi2, word))
            memo[word] = hit
        return hit

    hits1 = 0
    for _ in range(m):
        p1, p2 = probs(sampler1.draw(stream, horizon))
        if p1 < p2:
            hits1 += 1
    hits2 = 0
    for _ in range(m):
        p1, p2 = probs(sampler2.draw(stream, horizon))
        if p1 >= p2:
            hits2 += 1
    p_hat_1 = Fraction(hits1, m)
    p_hat_2 = Fraction(hits2, m)
    return SampleEstimate(
        estimate=1 - p_hat_1 - p_hat_2,
        p_hat_1=p_hat_1,
        p_hat_2=p_hat_2,
        samples_per_side=m,
        epsilon=as_fraction(epsilon, "epsilon"),
        delta=as_fraction(delta, "delta"),
        seed=seed,
    )


# -- deterministic bounded-precision estimation --------------------------------


def length_bound(lmc: Lmc, tail_budget: Fraction | int, step_cap: int = 1024) -> int:
    """A length n with tail mass at most ``tail_budget`` from *every* start.

    Primary path: iterate the exact per-state tail recurrence and return the
    smallest such n found within ``step_cap`` steps.  If the cap is hit, fall
    back to the certified closed form k * |Q| with k >= -ln(tail_budget) /
    p_min^|Q| (p_min the smallest positive probability in the chain), which is
    always sufficient but usually far larger.
    """
    lam = as_fraction(tail_budget, "tail budget")
    if lam <= 0:
        raise DomainError(f"tail budget must be positive, got {lam}")
    if step_cap < 0:
        raise DomainError(f"step cap must be nonnegative, got {step_cap}")
    # tails[q] = probability of emitting a word longer than n from state q.
    tails = [ONE - e for e in lmc.eow]
    if max(tails) <= lam:
        return 0
    rows = lmc.combined_rows
    n_states = lmc.n_states
    for n in range(1, step_cap + 1):
        tails = [
            sum((p * tails[j] for j, p in rows[i]), ZERO) for i in range(n_states)
        ]
        if max(tails) <= lam:
            return n
    # Certified fallback.
    positives = [e for e in lmc.eow if e > 0]
    positives.extend(p for mat in lmc.matrices for row in mat for p in row if p > 0)
    if not positives:
        raise DomainError("chain has no positive probabilities; cannot bound its tail")
    p_min = min(positives)
    if p_min == 1:
        return max(n_states - 1, 0)
    k = math.ceil(ln_upper(1 / lam) / p_min**n_states)
    return k * n_states


@dataclass(frozen=True)
class BoundedEstimate:
    """A deterministic distance estimate with every parameter that shaped it.

    Words up to ``length_cutoff`` were classified by comparing their two
    probabilities in ``precision``-bit arithmetic; ``mass1_lt`` is the exact
    first-start mass of words classified strictly smaller, ``mass2_ge`` the
    exact second-start mass of the rest (ties included).  The estimate
    1 - mass1_lt - mass2_ge is within epsilon/2 of the true distance, where
    epsilon = 4 * tail_budget = 8 * rounding_budget.
    """

    estimate: Fraction
    mass1_lt: Fraction
    mass2_ge: Fraction
    length_cutoff: int
    precision: int
    tail_budget: Fraction
    rounding_budget: Fraction
    words_enumerated: int


def _bounded_walk(
    lmc: Lmc,
    pi1: InitialDistribution,
    pi2: InitialDistribution,
    max_len: int,
    precision: int,
    budget: int,
) -> Iterator[tuple[tuple[str, ...], Fraction, Fraction, FloatK, FloatK]]:
    """Enumerate all words of length at most ``max_len`` reachable under either
    start, yielding exact and k-bit stop probabilities side by side.

    Prunes subtrees where both exact prefix vectors vanish: their k-bit twins
    vanish too (rounding preserves zero versus positive), so every pruned word
    would be classified as a tie with zero mass on both sides.
    """
    if budget < 1:
        raise DomainError(f"node budget must be positive, got {budget}")
    model = RoundedModel(lmc, precision)
    alphabet = lmc.alphabet
    nlabels = len(alphabet)
    rows = lmc.sparse_rows
    eow = lmc.eow
    v1 = sparsify(pi1.weights)
    v2 = sparsify(pi2.weights)
    f1 = model.initial(pi1)
    f2 = model.initial(pi2)
    nodes = 1
    yield (), stop_mass(v1, eow), stop_mass(v2, eow), model.stop_mass(f1), model.stop_mass(f2)
    prefix: list[str] = []
    stack: list[list] = [[v1, v2, f1, f2, 0]]
    while stack:
        frame = stack[-1]
        li = frame[4]
        if li == nlabels or (len(prefix) == max_len and li == 0):
            stack.pop()
            if prefix:
                prefix.pop()
            continue
        frame[4] = li + 1
        n1 = advance(frame[0], rows[li])
        n2 = advance(frame[1], rows[li])
        if not n1 and not n2:
            continue
        nodes += 1
        if nodes > budget:
            raise BudgetExceededError(
                f"enumeration exceeded the node budget of {budget} "
                f"(length cutoff {max_len}, precision {precision})",
                nodes_visited=nodes,
            )
        g1 = model.advance(frame[2], li)
        g2 = model.advance(frame[3], li)
        prefix.append(alphabet[li])
        stack.append([n1, n2, g1, g2, 0])
        yield (
            tuple(prefix),
            stop_mass(n1, eow),
            stop_mass(n2, eow),
            model.stop_mass(g1),
            model.stop_mass(g2),
        )


def tv_bounded(
    lmc: Lmc,
    pi1: InitialDistribution,
    pi2: InitialDistribution,
    epsilon: Fraction | int,
    budget: int = DEFAULT_NODE_BUDGET,
    step_cap: int = 1024,
) -> BoundedEstimate:
    """Deterministically estimate the distance to within epsilon/2.

    Works for cyclic chains: the support is cut at a length keeping the tail
    mass of either start below epsilon/4, and every remaining word is
    classified by comparing its two probabilities computed in k-bit floating
    point, with k wide enough for relative error epsilon/8.  The two class
    masses are accumulated exactly, so the only error sources are the cut
    tail and misclassified near-ties, each budgeted separately.
    """
    epsilon = as_fraction(epsilon, "epsilon")
    if epsilon <= 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    check_distribution(lmc, pi1, "first initial distribution")
    check_distribution(lmc, pi2, "second initial distribution")
    tail_budget = epsilon / 4
    rounding_budget = epsilon / 8
    cutoff = length_bound(lmc, tail_budget, step_cap=step_cap)
    precision = precision_for(cutoff, lmc.n_states, rounding_budget)
    mass1_lt = ZERO
    mass2_ge = ZERO
    count = 0
    for _, p1, p2, fp1, fp2 in _bounded_walk(lmc, pi1, pi2, cutoff, precision, budget):
        count += 1
        if fp1 < fp2:
            mass1_lt += p1
        else:
            mass2_ge += p2
    return BoundedEstimate(
        estimate=1 - mass1_lt - mass2_ge,
        mass1_lt=mass1_lt,
        mass2_ge=mass2_ge,
        length_cutoff=cutoff,
        precision=precision,
        tail_budget=tail_budget,
        rounding_budget=rounding_budget,
        words_enumerated=count,
    )
