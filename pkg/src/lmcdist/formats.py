"""Reading and writing models, distributions and automata as JSON.

All probabilities travel as exact rational strings ("1/3", "1") -- never as
binary floats -- so a chain survives any number of save/load round trips
bit-for-bit.  Malformed input raises ``ParseError`` with the offending file
and element named; semantic violations (rows not summing to one, states that
can never stop) are also ``ParseError`` under the default strict loading, or
can be collected separately via ``validate`` after a shape-only load.

File shapes:

* chain:         {"states": [..], "alphabet": [..],
                  "transitions": [{"from","label","to","prob"}, ..],
                  "eow": {state: prob, ..}}            (omitted state: 0)
* distribution:  {state: prob, ..}                     (omitted state: 0)
* NFA:           {"states", "alphabet", "initial", "accepting",
                  "transitions": [{"from","label","to"}, ..]}
* PA:            like a chain but with "initial_dist" and "accepting"
                  instead of "eow"; rows must be exactly stochastic.
"""

from __future__ import annotations

import json
import re
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping, Sequence

from .automata import Nfa, Pa
from .errors import DomainError, ParseError
from .model import InitialDistribution, Lmc, Word, validate

_PROB_RE = re.compile(r"^\d+(/\d+)?$")

#: Name of the empty word in command-line input and text reports.
EMPTY_WORD_MARK = "ε"


# -- scalars --------------------------------------------------------------------


def parse_prob(value: Any, where: str) -> Fraction:
    """An exact probability from its interchange form.

    Accepts "num/den", an integer string, or a JSON integer; rejects floats
    (inexact by construction), negative values and anything above 1.
    """
    if isinstance(value, bool):
        raise ParseError(f"{where}: expected a probability, got {value!r}")
    if isinstance(value, int):
        prob = Fraction(value)
    elif isinstance(value, str):
        if not _PROB_RE.match(value):
            raise ParseError(
                f"{where}: {value!r} is not a probability; write it as "
                f'"num/den" or an integer string'
            )
        try:
            prob = Fraction(value)
        except ZeroDivisionError:
            raise ParseError(f"{where}: {value!r} has denominator zero") from None
    elif isinstance(value, float):
        raise ParseError(
            f"{where}: {value!r} is a binary float; write the exact rational "
            f'as "num/den"'
        )
    else:
        raise ParseError(f"{where}: expected a probability, got {value!r}")
    if not 0 <= prob <= 1:
        raise ParseError(f"{where}: probability {prob} is outside [0, 1]")
    return prob


def prob_str(value: Fraction) -> str:
    """Interchange form of a probability ("num/den" in lowest terms)."""
    return str(value)


def decimal15(value: Fraction | int) -> str:
    """A decimal rendering correct to 15 significant digits.

    Round-half-even at the 15th significant digit, then printed in plain
    positional notation; exact zero prints as "0".
    """
    value = Fraction(value)
    if value == 0:
        return "0"
    with localcontext() as ctx:
        ctx.prec = 50
        dec = Decimal(value.numerator) / Decimal(value.denominator)
        quantum = Decimal(1).scaleb(dec.adjusted() - 14)
        return format(dec.quantize(quantum, rounding=ROUND_HALF_EVEN), "f")


def parse_word(text: str, alphabet: Sequence[str] | None = None) -> Word:
    """A word from command-line text.

    Letters are separated by spaces or commas; "ε" (or an empty string)
    denotes the empty word.  As a convenience, a single unseparated token is
    split into characters when every character is a label of the given
    alphabet (so ``abb`` works for one-letter labels).
    """
    text = text.strip()
    if text in ("", EMPTY_WORD_MARK):
        return ()
    letters = tuple(t for t in re.split(r"[,\s]+", text) if t)
    if alphabet is not None:
        labels = set(alphabet)
        if (
            len(letters) == 1
            and letters[0] not in labels
            and all(ch in labels for ch in letters[0])
        ):
            return tuple(letters[0])
    return letters


def format_word(word: Word) -> str:
    """Inverse of ``parse_word`` (letters joined by spaces, "ε" if empty)."""
    return " ".join(word) if word else EMPTY_WORD_MARK


# -- shape helpers ---------------------------------------------------------------


def _expect_dict(value: Any, where: str) -> dict:
    if not isinstance(value, dict):
        raise ParseError(f"{where}: expected an object, got {type(value).__name__}")
    return value


def _expect_names(value: Any, where: str) -> tuple[str, ...]:
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        raise ParseError(f"{where}: expected an array of strings")
    return tuple(value)


def _expect_keys(data: dict, required: Sequence[str], where: str) -> None:
    missing = [k for k in required if k not in data]
    if missing:
        raise ParseError(f"{where}: missing key(s) {', '.join(map(repr, missing))}")
    unknown = [k for k in data if k not in required]
    if unknown:
        raise ParseError(f"{where}: unknown key(s) {', '.join(map(repr, unknown))}")


def _expect_str(value: Any, where: str) -> str:
    if not isinstance(value, str):
        raise ParseError(f"{where}: expected a string, got {type(value).__name__}")
    return value


def _load_json(path: str | Path) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON: {exc}") from None


def _write_json(data: Any, path: str | Path) -> None:
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


# -- labelled Markov chains -------------------------------------------------------


def lmc_from_dict(data: Any, strict: bool = True, where: str = "<chain>") -> Lmc:
    """Build a chain from its interchange dictionary.

    With ``strict`` (the default) semantic violations -- rows not summing to
    one, states that cannot reach a stopping state -- are raised as
    ``ParseError``; without it only shapes and probability ranges are
    enforced, leaving ``validate`` to report the rest.
    """
    data = _expect_dict(data, where)
    _expect_keys(data, ("states", "alphabet", "transitions", "eow"), where)
    states = _expect_names(data["states"], f"{where}: states")
    alphabet = _expect_names(data["alphabet"], f"{where}: alphabet")
    if not isinstance(data["transitions"], list):
        raise ParseError(f"{where}: transitions: expected an array")
    records = []
    for i, item in enumerate(data["transitions"]):
        spot = f"{where}: transitions[{i}]"
        item = _expect_dict(item, spot)
        _expect_keys(item, ("from", "label", "to", "prob"), spot)
        records.append(
            (
                _expect_str(item["from"], f"{spot}: from"),
                _expect_str(item["label"], f"{spot}: label"),
                _expect_str(item["to"], f"{spot}: to"),
                parse_prob(item["prob"], f"{spot}: prob"),
            )
        )
    eow_data = _expect_dict(data["eow"], f"{where}: eow")
    eow = {
        _expect_str(state, f"{where}: eow key"): parse_prob(
            prob, f"{where}: eow[{state!r}]"
        )
        for state, prob in eow_data.items()
    }
    try:
        lmc = Lmc.from_transitions(states, alphabet, records, eow)
    except DomainError as exc:
        raise ParseError(f"{where}: {exc}") from None
    if strict:
        violations = validate(lmc)
        if violations:
            raise ParseError(f"{where}: " + "; ".join(violations))
    return lmc


def load_lmc(path: str | Path, strict: bool = True) -> Lmc:
    return lmc_from_dict(_load_json(path), strict=strict, where=str(path))


def lmc_to_dict(lmc: Lmc) -> dict:
    return {
        "states": list(lmc.states),
        "alphabet": list(lmc.alphabet),
        "transitions": [
            {"from": src, "label": label, "to": tgt, "prob": prob_str(prob)}
            for src, label, tgt, prob in lmc.transition_records()
        ],
        "eow": {
            state: prob_str(prob)
            for state, prob in zip(lmc.states, lmc.eow)
            if prob
        },
    }


def save_lmc(lmc: Lmc, path: str | Path) -> None:
    _write_json(lmc_to_dict(lmc), path)


# -- initial distributions ---------------------------------------------------------


def distribution_from_dict(
    data: Any, lmc: Lmc, where: str = "<distribution>"
) -> InitialDistribution:
    data = _expect_dict(data, where)
    weights = {
        _expect_str(state, f"{where}: key"): parse_prob(prob, f"{where}[{state!r}]")
        for state, prob in data.items()
    }
    try:
        return InitialDistribution.from_map(lmc, weights)
    except DomainError as exc:
        raise ParseError(f"{where}: {exc}") from None


def load_distribution(path: str | Path, lmc: Lmc) -> InitialDistribution:
    return distribution_from_dict(_load_json(path), lmc, where=str(path))


def distribution_to_dict(pi: InitialDistribution, lmc: Lmc) -> dict:
    return {
        state: prob_str(w) for state, w in zip(lmc.states, pi.weights) if w
    }


def save_distribution(pi: InitialDistribution, lmc: Lmc, path: str | Path) -> None:
    _write_json(distribution_to_dict(pi, lmc), path)


# -- nondeterministic finite automata ----------------------------------------------


def nfa_from_dict(data: Any, where: str = "<nfa>") -> Nfa:
    data = _expect_dict(data, where)
    _expect_keys(data, ("states", "alphabet", "initial", "accepting", "transitions"), where)
    if not isinstance(data["transitions"], list):
        raise ParseError(f"{where}: transitions: expected an array")
    triples = []
    for i, item in enumerate(data["transitions"]):
        spot = f"{where}: transitions[{i}]"
        item = _expect_dict(item, spot)
        _expect_keys(item, ("from", "label", "to"), spot)
        triples.append(
            (
                _expect_str(item["from"], f"{spot}: from"),
                _expect_str(item["label"], f"{spot}: label"),
                _expect_str(item["to"], f"{spot}: to"),
            )
        )
    try:
        return Nfa(
            states=_expect_names(data["states"], f"{where}: states"),
            alphabet=_expect_names(data["alphabet"], f"{where}: alphabet"),
            initial=_expect_str(data["initial"], f"{where}: initial"),
            accepting=frozenset(_expect_names(data["accepting"], f"{where}: accepting")),
            transitions=frozenset(triples),
        )
    except DomainError as exc:
        raise ParseError(f"{where}: {exc}") from None


def load_nfa(path: str | Path) -> Nfa:
    return nfa_from_dict(_load_json(path), where=str(path))


def nfa_to_dict(nfa: Nfa) -> dict:
    order = {q: i for i, q in enumerate(nfa.states)}
    lorder = {a: i for i, a in enumerate(nfa.alphabet)}
    return {
        "states": list(nfa.states),
        "alphabet": list(nfa.alphabet),
        "initial": nfa.initial,
        "accepting": sorted(nfa.accepting, key=order.__getitem__),
        "transitions": [
            {"from": src, "label": label, "to": tgt}
            for src, label, tgt in sorted(
                nfa.transitions,
                key=lambda t: (order[t[0]], lorder[t[1]], order[t[2]]),
            )
        ],
    }


def save_nfa(nfa: Nfa, path: str | Path) -> None:
    _write_json(nfa_to_dict(nfa), path)


# -- probabilistic automata ---------------------------------------------------------


def pa_from_dict(data: Any, where: str = "<pa>") -> Pa:
    data = _expect_dict(data, where)
    _expect_keys(
        data, ("states", "alphabet", "transitions", "initial_dist", "accepting"), where
    )
    states = _expect_names(data["states"], f"{where}: states")
    alphabet = _expect_names(data["alphabet"], f"{where}: alphabet")
    sidx = {s: i for i, s in enumerate(states)}
    lidx = {a: i for i, a in enumerate(alphabet)}
    if len(sidx) != len(states) or len(lidx) != len(alphabet):
        raise ParseError(f"{where}: state names and labels must be unique")
    if not isinstance(data["transitions"], list):
        raise ParseError(f"{where}: transitions: expected an array")
    grids = [[[Fraction(0)] * len(states) for _ in states] for _ in alphabet]
    seen = set()
    for i, item in enumerate(data["transitions"]):
        spot = f"{where}: transitions[{i}]"
        item = _expect_dict(item, spot)
        _expect_keys(item, ("from", "label", "to", "prob"), spot)
        src = _expect_str(item["from"], f"{spot}: from")
        label = _expect_str(item["label"], f"{spot}: label")
        tgt = _expect_str(item["to"], f"{spot}: to")
        if src not in sidx or tgt not in sidx:
            raise ParseError(f"{spot}: names an unknown state")
        if label not in lidx:
            raise ParseError(f"{spot}: label {label!r} is not in the alphabet")
        if (src, label, tgt) in seen:
            raise ParseError(f"{spot}: duplicate transition")
        seen.add((src, label, tgt))
        grids[lidx[label]][sidx[src]][sidx[tgt]] = parse_prob(
            item["prob"], f"{spot}: prob"
        )
    init_data = _expect_dict(data["initial_dist"], f"{where}: initial_dist")
    weights = [Fraction(0)] * len(states)
    for state, prob in init_data.items():
        if state not in sidx:
            raise ParseError(f"{where}: initial_dist names unknown state {state!r}")
        weights[sidx[state]] = parse_prob(prob, f"{where}: initial_dist[{state!r}]")
    try:
        return Pa(
            states=states,
            alphabet=alphabet,
            matrices=tuple(tuple(tuple(row) for row in grid) for grid in grids),
            initial=tuple(weights),
            accepting=frozenset(_expect_names(data["accepting"], f"{where}: accepting")),
        )
    except DomainError as exc:
        raise ParseError(f"{where}: {exc}") from None


def load_pa(path: str | Path) -> Pa:
    return pa_from_dict(_load_json(path), where=str(path))


def pa_to_dict(pa: Pa) -> dict:
    order = {q: i for i, q in enumerate(pa.states)}
    return {
        "states": list(pa.states),
        "alphabet": list(pa.alphabet),
        "transitions": [
            {"from": src, "label": label, "to": tgt, "prob": prob_str(prob)}
            for label, mat in zip(pa.alphabet, pa.matrices)
            for i, src in enumerate(pa.states)
            for j, tgt in enumerate(pa.states)
            if (prob := mat[i][j])
        ],
        "initial_dist": {
            state: prob_str(w) for state, w in zip(pa.states, pa.initial) if w
        },
        "accepting": sorted(pa.accepting, key=order.__getitem__),
    }


def save_pa(pa: Pa, path: str | Path) -> None:
    _write_json(pa_to_dict(pa), path)
