"""Random models and constraints shared by the property and equivalence tests."""

from __future__ import annotations

import random
from fractions import Fraction

from hypothesis import strategies as st

from arexact.armodel import MarkovModel, Vocabulary, all_contexts
from arexact.constraints import (ConstraintAutomaton, FixedLengthConstraint, InpaintingSpec,
                                 MetricalConstraint, UnaryConstraint)

FAMILIES = ("fixedlen", "unary", "metrical", "inpaint", "dfa")


def random_row(rng: random.Random, n: int) -> list[Fraction]:
    while True:
        ints = [rng.randint(0, 4) for _ in range(n)]
        if sum(ints):
            total = sum(ints)
            return [Fraction(i, total) for i in ints]


def random_vocab(rng: random.Random) -> Vocabulary:
    size = rng.randint(2, 4)
    labels = [f"t{i}" for i in range(size - 1)]
    labels.insert(rng.randrange(size), "eos")
    return Vocabulary.of(labels)


def random_markov(rng: random.Random) -> MarkovModel:
    vocab = random_vocab(rng)
    order = rng.randint(0, 2)
    rows = {c: random_row(rng, len(vocab)) for c in all_contexts(vocab, order)}
    return MarkovModel(vocab, order, rows)


def random_constraint(rng: random.Random, vocab: Vocabulary, family: str):
    n, eos = len(vocab), vocab.eos
    plain = vocab.non_eos
    if family == "fixedlen":
        return FixedLengthConstraint(rng.randint(1, 5))
    if family == "unary":
        length = rng.randint(1, 5)
        sets = [frozenset(rng.sample(range(n), rng.randint(1, n))) for _ in range(length)]
        if rng.random() < 0.85:
            sets[-1] = sets[-1] | {eos}
        return UnaryConstraint(tuple(sets))
    if family == "metrical":
        weights = [rng.randint(1, 3) for _ in range(n)]
        weights[eos] = rng.randint(0, 1)
        return MetricalConstraint(tuple(weights), rng.randint(0, 6))
    if family == "inpaint":
        u = tuple(rng.choice(plain) for _ in range(rng.randint(0, 2)))
        v = tuple(rng.choice(plain) for _ in range(rng.randint(0, 2)))
        if rng.random() < 0.3:
            v += (eos,)
        if rng.random() < 0.5:
            return InpaintingSpec(u, v, total_length=len(u) + len(v) + 1 + rng.randint(0, 3))
        return InpaintingSpec(u, v, max_length=len(u) + len(v) + 1 + rng.randint(0, 3))
    states = rng.randint(1, 4)
    delta = tuple({t: rng.randrange(states) for t in range(n) if rng.random() < 0.75} for _ in range(states))
    accepting = frozenset(s for s in range(states) if rng.random() < 0.5) or frozenset({0})
    return ConstraintAutomaton(n, eos, states, 0, delta, accepting, max_length=rng.randint(1, 6))


@st.composite
def markov_models(draw, max_order: int = 2) -> MarkovModel:
    size = draw(st.integers(2, 4))
    eos = draw(st.integers(0, size - 1))
    vocab = Vocabulary(tuple(f"t{i}" if i != eos else "eos" for i in range(size)), eos)
    order = draw(st.integers(0, max_order))
    rows = {}
    for c in all_contexts(vocab, order):
        ints = draw(st.lists(st.integers(0, 5), min_size=size, max_size=size).filter(any))
        rows[c] = [Fraction(i, sum(ints)) for i in ints]
    return MarkovModel(vocab, order, rows)
