"""Heuristic constrained decoders: greedy, beam, rejection and masked ancestral.

They share one notion of admissibility, :meth:`ConstraintAutomaton.advance`,
which looks exactly one token ahead. None of them uses continuation masses,
which is the point: their output laws can then be compared to the exact
conditional.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

from .armodel import ONE, ZERO, ArModel, Seq
from .constraints import ConstraintAutomaton
from .rng import RowSampler, make_rng

KINDS = ("greedy", "beam", "rejection", "masked-ancestral", "exact")
Status = Literal["ok", "dead-end", "overflow", "exhausted"]


@dataclass(frozen=True)
class DecoderConfig:
    """Which decoder to run and its parameters.

    ``beam_width`` applies to beam only (``None`` there means unbounded) and
    ``max_attempts`` to rejection only. ``exact`` is the continuation-mass
    sampler from :mod:`arexact.dynprog`, included as the unbiased reference.
    """

    kind: str
    beam_width: int | None = None
    max_attempts: int | None = None
    max_steps: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown decoder kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if self.kind == "beam":
            if self.beam_width is not None and self.beam_width < 1:
                raise ValueError("beam_width must be >= 1")
        elif self.beam_width is not None:
            raise ValueError("beam_width only applies to beam decoding")
        if self.kind == "rejection":
            if self.max_attempts is None or self.max_attempts < 1:
                raise ValueError("rejection sampling needs max_attempts >= 1")
        elif self.max_attempts is not None:
            raise ValueError("max_attempts only applies to rejection sampling")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")

    @property
    def deterministic(self) -> bool:
        return self.kind in ("greedy", "beam")

    def label(self) -> str:
        if self.kind == "beam":
            return f"beam({self.beam_width or 'inf'})"
        if self.kind == "rejection":
            return f"rejection({self.max_attempts})"
        return self.kind


@dataclass(frozen=True)
class DecodeResult:
    """Outcome of one decoder run.

    On failure ``sequence`` is None and ``prefix`` holds the tokens emitted
    before the decoder got stuck (dead-end) or ran out of steps (overflow).
    """

    status: Status
    sequence: Seq | None = None
    prefix: Seq = ()
    probability: Fraction | None = None
    attempts: int = 1

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _resolve_steps(constraint: ConstraintAutomaton, max_steps: int | None) -> int:
    if max_steps is not None:
        if max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        return max_steps
    implied = constraint.implied_horizon()
    if implied is None:
        raise ValueError("max_steps is required: the constraint does not bound sequence length")
    return implied


def greedy_decode(model: ArModel, constraint: ConstraintAutomaton, max_steps: int | None = None) -> DecodeResult:
    steps = _resolve_steps(constraint, max_steps)
    eos = model.vocab.eos
    config = constraint.start()
    prefix: Seq = ()
    prob = ONE
    for _ in range(steps):
        row = model.conditional(prefix)
        pick = None
        for tok, p in enumerate(row):
            if p and (pick is None or p > row[pick]):
                nxt = constraint.advance(config, tok)
                if nxt is not None:
                    pick, pick_config = tok, nxt
        if pick is None:
            return DecodeResult("dead-end", prefix=prefix)
        prefix += (pick,)
        prob *= row[pick]
        config = pick_config
        if pick == eos:
            return DecodeResult("ok", prefix, prefix, prob)
    return DecodeResult("overflow", prefix=prefix)


def beam_decode(model: ArModel, constraint: ConstraintAutomaton, width: int | None,
                max_steps: int | None = None) -> DecodeResult:
    """Width-limited breadth-wise search scored by exact prefix probability.

    At every step all admissible one-token extensions of the live beam are
    ranked (probability descending, then token order) and the top ``width``
    kept; kept extensions ending in eos retire as finished hypotheses.
    ``width=None`` keeps everything, which makes the search exact within
    ``max_steps``.
    """
    if width is not None and width < 1:
        raise ValueError("width must be >= 1")
    steps = _resolve_steps(constraint, max_steps)
    eos = model.vocab.eos
    beams: list[tuple[Seq, Fraction, tuple]] = [((), ONE, constraint.start())]
    finished: list[tuple[Seq, Fraction]] = []
    last_live: Seq = ()
    for _ in range(steps):
        cands = []
        for prefix, prob, config in beams:
            row = model.conditional(prefix)
            for tok, p in enumerate(row):
                if not p:
                    continue
                nxt = constraint.advance(config, tok)
                if nxt is not None:
                    cands.append((prefix + (tok,), prob * p, nxt))
        cands.sort(key=lambda c: (-c[1], c[0]))
        if width is not None:
            cands = cands[:width]
        beams = [c for c in cands if c[0][-1] != eos]
        finished.extend((c[0], c[1]) for c in cands if c[0][-1] == eos)
        if beams:
            last_live = beams[0][0]
        else:
            break
    if finished:
        seq, prob = min(finished, key=lambda f: (-f[1], len(f[0]), f[0]))
        return DecodeResult("ok", seq, seq, prob)
    return DecodeResult("overflow" if beams else "dead-end", prefix=last_live)


class RejectionSampler:
    """Ancestral sampling until the draw is feasible.

    A draw is abandoned as soon as its prefix is rejected by the automaton;
    such a draw could never be accepted, so this changes cost, not law.
    """

    def __init__(self, model: ArModel, constraint: ConstraintAutomaton, max_steps: int | None = None):
        self.model = model
        self.constraint = constraint
        self.max_steps = _resolve_steps(constraint, max_steps)

    def attempt(self, rng: random.Random) -> Seq | None:
        model, con = self.model, self.constraint
        eos = model.vocab.eos
        config = con.start()
        prefix: Seq = ()
        for _ in range(self.max_steps):
            tok = model.row_sampler(prefix).draw(rng)
            config = con.advance(config, tok)
            if config is None:
                return None
            prefix += (tok,)
            if tok == eos:
                return prefix
        return None

    def sample(self, rng: random.Random, max_attempts: int) -> DecodeResult:
        if max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        for i in range(1, max_attempts + 1):
            x = self.attempt(rng)
            if x is not None:
                return DecodeResult("ok", x, x, attempts=i)
        return DecodeResult("exhausted", attempts=max_attempts)


def rejection_sample(model: ArModel, constraint: ConstraintAutomaton, max_attempts: int,
                     seed: int | random.Random = 0, max_steps: int | None = None) -> DecodeResult:
    rng = seed if isinstance(seed, random.Random) else make_rng(seed)
    return RejectionSampler(model, constraint, max_steps).sample(rng, max_attempts)


class MaskedSampler:
    """Zero out locally rejected tokens, renormalize the row, sample.

    No lookahead: a token is admissible when its own transition is accepted.
    Per-(context, run configuration) samplers are cached across draws.
    """

    def __init__(self, model: ArModel, constraint: ConstraintAutomaton, max_steps: int | None = None):
        self.model = model
        self.constraint = constraint
        self.max_steps = _resolve_steps(constraint, max_steps)
        self._cache: dict = {}

    def masked_row(self, prefix: Seq, config) -> list[tuple[int, Fraction, tuple]]:
        """Admissible tokens with their locally renormalized probabilities."""
        row = self.model.conditional(prefix)
        kept = []
        for tok, p in enumerate(row):
            if p:
                nxt = self.constraint.advance(config, tok)
                if nxt is not None:
                    kept.append((tok, p, nxt))
        total = sum((p for _, p, _ in kept), ZERO)
        return [(tok, p / total, nxt) for tok, p, nxt in kept]

    def _entry(self, prefix: Seq, config):
        key = (self.model.context(prefix), config)
        entry = self._cache.get(key)
        if entry is None:
            masked = self.masked_row(prefix, config)
            sampler = RowSampler([q for _, q, _ in masked]) if masked else None
            entry = self._cache[key] = ([(t, n) for t, _, n in masked], sampler)
        return entry

    def sample(self, rng: random.Random) -> DecodeResult:
        eos = self.model.vocab.eos
        config = self.constraint.start()
        prefix: Seq = ()
        for _ in range(self.max_steps):
            choices, sampler = self._entry(prefix, config)
            if sampler is None:
                return DecodeResult("dead-end", prefix=prefix)
            tok, config = choices[sampler.draw(rng)]
            prefix += (tok,)
            if tok == eos:
                return DecodeResult("ok", prefix, prefix)
        return DecodeResult("overflow", prefix=prefix)

    def law(self) -> tuple[dict[Seq, Fraction], Fraction]:
        """Exact output law of the masked process: (sequence -> probability, failure mass)."""
        eos = self.model.vocab.eos
        out: dict[Seq, Fraction] = {}
        failed = ZERO
        stack = [((), self.constraint.start(), ONE)]
        while stack:
            prefix, config, prob = stack.pop()
            if len(prefix) == self.max_steps:
                failed += prob
                continue
            masked = self.masked_row(prefix, config)
            if not masked:
                failed += prob
            for tok, q, nxt in masked:
                if tok == eos:
                    out[prefix + (tok,)] = prob * q
                else:
                    stack.append((prefix + (tok,), nxt, prob * q))
        return out, failed


def masked_ancestral_sample(model: ArModel, constraint: ConstraintAutomaton,
                            seed: int | random.Random = 0, max_steps: int | None = None) -> DecodeResult:
    rng = seed if isinstance(seed, random.Random) else make_rng(seed)
    return MaskedSampler(model, constraint, max_steps).sample(rng)


def masked_ancestral_law(model: ArModel, constraint: ConstraintAutomaton,
                         max_steps: int | None = None) -> tuple[dict[Seq, Fraction], Fraction]:
    return MaskedSampler(model, constraint, max_steps).law()
