"""Autoregressive models with exact rational next-token conditionals.

A model is anything that maps a prefix of non-eos token indices to a row of
:class:`~fractions.Fraction` probabilities over the vocabulary. Two concrete
families ship: table-driven order-k Markov models (here) and CNF gadget
models (:mod:`arexact.gadget`). Further model programs plug in by
subclassing :class:`ArModel` and implementing :meth:`ArModel.conditional`.

Sequences are tuples of token indices. A *complete* sequence ends in eos
and has no earlier eos.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable, Hashable, Iterable, Sequence

from .rng import RowSampler, make_rng

ZERO = Fraction(0)
ONE = Fraction(1)

Row = tuple[Fraction, ...]
Seq = tuple[int, ...]


class ModelError(ValueError):
    """Malformed model description or invalid query against a model."""


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple[str, ...]
    eos: int

    def __post_init__(self):
        if len(self.tokens) < 2:
            raise ModelError("vocabulary needs at least two tokens")
        if len(set(self.tokens)) != len(self.tokens):
            raise ModelError("duplicate token labels")
        if not 0 <= self.eos < len(self.tokens):
            raise ModelError(f"eos index {self.eos} out of range")
        for t in self.tokens:
            if not t or any(c.isspace() for c in t) or t in ("|", "*"):
                raise ModelError(f"unusable token label {t!r}")

    @classmethod
    def of(cls, labels: Iterable[str], eos: str = "eos") -> "Vocabulary":
        labels = tuple(labels)
        if eos not in labels:
            raise ModelError(f"eos label {eos!r} missing from vocabulary")
        return cls(labels, labels.index(eos))

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def non_eos(self) -> list[int]:
        return [i for i in range(len(self.tokens)) if i != self.eos]

    def index(self, label: str) -> int:
        try:
            return self.tokens.index(label)
        except ValueError:
            raise ModelError(f"unknown token {label!r}") from None

    def encode(self, labels: str | Iterable[str]) -> Seq:
        if isinstance(labels, str):
            labels = labels.split()
        return tuple(self.index(t) for t in labels)

    def render(self, seq: Iterable[int]) -> str:
        return " ".join(self.tokens[i] for i in seq)


def check_complete(seq: Sequence[int], vocab: Vocabulary) -> Seq:
    """Validate ``seq`` as a complete sequence and return it as a tuple."""
    seq = tuple(seq)
    if not seq:
        raise ModelError("complete sequence must be nonempty")
    if any(not 0 <= t < len(vocab) for t in seq):
        raise ModelError(f"token index out of range in {seq}")
    if seq[-1] != vocab.eos:
        raise ModelError("complete sequence must end in eos")
    if vocab.eos in seq[:-1]:
        raise ModelError("eos before the final position")
    return seq


def is_complete(seq: Sequence[int], vocab: Vocabulary) -> bool:
    return bool(seq) and seq[-1] == vocab.eos and vocab.eos not in seq[:-1]


class ArModel:
    """Base class for succinct autoregressive models.

    Subclasses set ``self.vocab`` and implement :meth:`conditional`.
    :meth:`context` may be overridden to return a smaller hashable summary
    of the prefix; rows are cached per context during sampling.
    """

    vocab: Vocabulary

    def conditional(self, prefix: Seq) -> Row:
        raise NotImplementedError

    def context(self, prefix: Seq) -> Hashable:
        return prefix

    def row_sampler(self, prefix: Seq) -> RowSampler:
        cache = self.__dict__.setdefault("_samplers", {})
        key = self.context(prefix)
        sampler = cache.get(key)
        if sampler is None:
            sampler = cache[key] = RowSampler(self.conditional(prefix))
        return sampler


class CallableModel(ArModel):
    """Wrap a plain function ``prefix -> row`` as a model."""

    def __init__(self, vocab: Vocabulary, fn: Callable[[Seq], Sequence[Fraction]]):
        self.vocab = vocab
        self._fn = fn

    def conditional(self, prefix: Seq) -> Row:
        row = tuple(Fraction(p) for p in self._fn(prefix))
        if len(row) != len(self.vocab) or sum(row) != 1 or min(row) < 0:
            raise ModelError(f"conditional for {prefix} is not a distribution")
        return row


def next_token_distribution(model: ArModel, prefix: Sequence[int]) -> Row:
    prefix = tuple(prefix)
    if model.vocab.eos in prefix:
        raise ModelError("prefix contains eos")
    return model.conditional(prefix)


def sequence_probability(model: ArModel, x: Sequence[int]) -> Fraction:
    x = check_complete(x, model.vocab)
    p = ONE
    for i, tok in enumerate(x):
        p *= model.conditional(x[:i])[tok]
        if not p:
            return ZERO
    return p


def ancestral_sample(model: ArModel, seed: int | random.Random, max_steps: int) -> Seq | None:
    """Draw one complete sequence, or ``None`` if eos is not reached in ``max_steps``."""
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    rng = seed if isinstance(seed, random.Random) else make_rng(seed)
    eos = model.vocab.eos
    prefix: Seq = ()
    for _ in range(max_steps):
        tok = model.row_sampler(prefix).draw(rng)
        prefix += (tok,)
        if tok == eos:
            return prefix
    return None


class MarkovModel(ArModel):
    """Order-k Markov model given by explicit rational rows.

    The context of a prefix is its last ``min(order, len(prefix))`` tokens, so
    prefixes shorter than the order use the whole prefix as state. ``rows``
    must cover every context reachable through positive-probability non-eos
    tokens; unreachable contexts may be omitted.
    """

    def __init__(self, vocab: Vocabulary, order: int, rows: dict[Seq, Sequence[Fraction]]):
        if order < 0:
            raise ModelError("order must be nonnegative")
        self.vocab = vocab
        self.order = order
        self.rows: dict[Seq, Row] = {}
        for state, row in rows.items():
            state = tuple(state)
            if len(state) > order:
                raise ModelError(f"state {state} longer than order {order}")
            if vocab.eos in state:
                raise ModelError(f"state {vocab.render(state)!r} contains eos")
            row = tuple(Fraction(p) for p in row)
            if len(row) != len(vocab):
                raise ModelError(f"row for {vocab.render(state)!r} has {len(row)} entries")
            if min(row) < 0:
                raise ModelError(f"negative probability in row {vocab.render(state)!r}")
            if sum(row) != 1:
                raise ModelError(f"row {vocab.render(state)!r} sums to {sum(row)}, not 1")
            self.rows[state] = row
        missing = [s for s in self.reachable_states() if s not in self.rows]
        if missing:
            raise ModelError(f"no row for reachable state {vocab.render(missing[0])!r}")

    def context(self, prefix: Seq) -> Seq:
        if self.order == 0:
            return ()
        return tuple(prefix[-self.order:])

    def step(self, state: Seq, tok: int) -> Seq:
        if self.order == 0:
            return ()
        return (state + (tok,))[-self.order:]

    def conditional(self, prefix: Seq) -> Row:
        state = self.context(prefix)
        try:
            return self.rows[state]
        except KeyError:
            raise ModelError(f"no row for state {self.vocab.render(state)!r}") from None

    def reachable_states(self) -> list[Seq]:
        """Contexts reachable from the empty prefix, in discovery order."""
        seen = {(): None}
        frontier = [()]
        while frontier:
            state = frontier.pop()
            row = self.rows.get(state)
            if row is None:
                continue
            for tok in self.vocab.non_eos:
                if row[tok]:
                    nxt = self.step(state, tok)
                    if nxt not in seen:
                        seen[nxt] = None
                        frontier.append(nxt)
        return list(seen)


def uniform_iid(labels: Iterable[str], eos: str = "eos") -> MarkovModel:
    vocab = Vocabulary.of(labels, eos)
    p = Fraction(1, len(vocab))
    return MarkovModel(vocab, 0, {(): [p] * len(vocab)})


def load_markov(text: str) -> MarkovModel:
    """Parse the Markov model text format.

    ::

        markov <order> <vocab-size>
        a
        b
        eos *            # '*' marks the end-of-sequence token
        | 1/2 1/4 1/4    # empty state (start of sequence)
        a | 0 1/2 1/2
        b | 1/3 1/3 1/3

    Blank lines and ``#`` comments are ignored. Rows must sum to exactly 1.
    """
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((lineno, line))
    if not lines:
        raise ModelError("empty model file")
    lineno, header = lines[0]
    parts = header.split()
    if len(parts) != 3 or parts[0] != "markov":
        raise ModelError(f"line {lineno}: expected 'markov <order> <vocab-size>'")
    try:
        order, size = int(parts[1]), int(parts[2])
    except ValueError:
        raise ModelError(f"line {lineno}: order and vocab size must be integers") from None
    if len(lines) < 1 + size:
        raise ModelError("model file ends inside the vocabulary block")
    labels, eos = [], None
    for i, (lineno, line) in enumerate(lines[1:1 + size]):
        parts = line.split()
        if len(parts) == 2 and parts[1] == "*":
            if eos is not None:
                raise ModelError(f"line {lineno}: second eos marker")
            eos = i
        elif len(parts) != 1:
            raise ModelError(f"line {lineno}: expected a token label, optionally followed by '*'")
        labels.append(parts[0])
    if eos is None:
        raise ModelError("no token marked as eos with '*'")
    vocab = Vocabulary(tuple(labels), eos)
    rows: dict[Seq, list[Fraction]] = {}
    for lineno, line in lines[1 + size:]:
        if "|" not in line:
            raise ModelError(f"line {lineno}: state row needs '|'")
        left, right = line.split("|", 1)
        try:
            state = vocab.encode(left)
            row = [Fraction(p) for p in right.split()]
        except (ModelError, ValueError, ZeroDivisionError) as exc:
            raise ModelError(f"line {lineno}: {exc}") from None
        if state in rows:
            raise ModelError(f"line {lineno}: duplicate state")
        rows[state] = row
    try:
        return MarkovModel(vocab, order, rows)
    except ModelError as exc:
        raise ModelError(f"invalid model: {exc}") from None


def dump_markov(model: MarkovModel) -> str:
    vocab = model.vocab
    out = [f"markov {model.order} {len(vocab)}"]
    for i, t in enumerate(vocab.tokens):
        out.append(f"{t} *" if i == vocab.eos else t)
    for state in sorted(model.rows, key=lambda s: (len(s), s)):
        left = vocab.render(state)
        row = " ".join(str(p) for p in model.rows[state])
        out.append(f"{left} | {row}" if left else f"| {row}")
    return "\n".join(out) + "\n"


def all_contexts(vocab: Vocabulary, order: int) -> list[Seq]:
    """Every eos-free context of length at most ``order``."""
    out: list[Seq] = []
    for n in range(order + 1):
        out.extend(product(vocab.non_eos, repeat=n))
    return out
