"""Exact constrained inference for Markov models on the product state space.

A product state pairs the model's context with the constraint run
(automaton state, remaining weight budget, remaining length). Because both
halves are bounded, the probability of completing into a feasible sequence
from any product state -- the continuation mass beta -- satisfies a finite
recursion::

    beta(s) = sum_a P(a | context(s)) * beta(step(s, a))

with eos contributing P(eos | context) when it is admissible. The same
traversal with max in place of sum gives the constrained MAP. All values
are exact fractions.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import NamedTuple, Sequence

from .armodel import ONE, ZERO, MarkovModel, Seq, check_complete
from .constraints import Config, ConstraintAutomaton
from .oracle import MapResult
from .rng import RowSampler, make_rng

DEFAULT_MAX_STATES = 2_000_000


class UnboundedConstraint(ValueError):
    """The constraint admits arbitrarily long sequences; the recursion would not terminate."""


class Infeasible(ValueError):
    """The constraint has zero probability under the model."""


class TableTooLarge(RuntimeError):
    pass


class ProductState(NamedTuple):
    model_state: Seq
    automaton_state: int
    budget_remaining: int | None
    steps_remaining: int | None


def check_bounded(automaton: ConstraintAutomaton) -> None:
    if automaton.max_length is not None or automaton._acyclic_bound() is not None:
        return
    if automaton.has_budget:
        zero = [t for t, w in enumerate(automaton.weights) if t != automaton.eos and w == 0]
        if not zero:
            return
        raise UnboundedConstraint(
            f"token(s) {zero} have weight 0, so the remaining budget need not decrease; "
            "give the constraint an explicit maximum length"
        )
    raise UnboundedConstraint(
        "the automaton has cycles and no weight budget or maximum length bounds sequence length"
    )


class ContinuationTable:
    """Continuation masses and max-product scores over reachable product states.

    Built once per (model, constraint) pair and read-only afterwards.
    """

    def __init__(self, model: MarkovModel, automaton: ConstraintAutomaton,
                 max_states: int = DEFAULT_MAX_STATES):
        if not isinstance(model, MarkovModel):
            raise TypeError("the product-state recursion needs a MarkovModel")
        if automaton.num_tokens != len(model.vocab) or automaton.eos != model.vocab.eos:
            raise ValueError("automaton and model vocabularies differ")
        check_bounded(automaton)
        self.model = model
        self.automaton = automaton
        self.max_states = max_states
        self._cap = automaton.max_length
        self.beta: dict[ProductState, Fraction] = {}
        # best completion from a state: (probability, suffix length, first token)
        self.best: dict[ProductState, tuple[Fraction, int, int]] = {}
        self._samplers: dict[ProductState, RowSampler] = {}
        self.initial = self.state_of((), automaton.start())
        self._fill(self.initial)

    # -- state plumbing

    def state_of(self, context: Seq, config: Config) -> ProductState:
        aut, spent, length = config
        a = self.automaton
        return ProductState(
            context,
            aut,
            a.target - spent if a.has_budget else None,
            self._cap - length if self._cap is not None else None,
        )

    def _config(self, s: ProductState) -> Config:
        a = self.automaton
        spent = a.target - s.budget_remaining if a.has_budget else 0
        length = self._cap - s.steps_remaining if self._cap is not None else 0
        return (s.automaton_state, spent, length)

    def successors(self, s: ProductState):
        """Yield ``(token, P(token | context), next state or None for eos)`` for admissible tokens."""
        row = self.model.rows[s.model_state]
        eos = self.automaton.eos
        config = self._config(s)
        for tok, p in enumerate(row):
            if not p:
                continue
            nxt = self.automaton.advance(config, tok)
            if nxt is None:
                continue
            if tok == eos:
                yield tok, p, None
            else:
                yield tok, p, self.state_of(self.model.step(s.model_state, tok), nxt)

    def _fill(self, root: ProductState) -> None:
        # iterative post-order so long sequences do not hit the recursion limit
        stack = [(root, False)]
        while stack:
            s, expanded = stack.pop()
            if s in self.beta:
                continue
            succ = list(self.successors(s))
            if not expanded:
                stack.append((s, True))
                stack.extend((n, False) for _, _, n in succ if n is not None and n not in self.beta)
                continue
            beta = ZERO
            best = (ZERO, 0, -1)
            for tok, p, n in succ:
                if n is None:
                    cand = (p, 1, tok)
                    beta += p
                else:
                    beta += p * self.beta[n]
                    bp, blen, _ = self.best[n]
                    cand = (p * bp, blen + 1, tok)
                if cand[0] and (cand[0] > best[0] or (cand[0] == best[0] and (cand[1], cand[2]) < (best[1], best[2]))):
                    best = cand
            self.beta[s] = beta
            self.best[s] = best
            if len(self.beta) > self.max_states:
                raise TableTooLarge(f"more than {self.max_states} product states")

    # -- queries

    @property
    def z(self) -> Fraction:
        return self.beta[self.initial]

    def support_size(self) -> int:
        """Number of feasible sequences with positive probability, without listing them."""
        count: dict[ProductState, int] = {}
        for s in self.beta:  # insertion order is post-order: successors come first
            count[s] = sum(1 if n is None else count[n] for _, _, n in self.successors(s))
        return count[self.initial]

    def step_distribution(self, s: ProductState) -> list[tuple[int, Fraction, ProductState | None]]:
        """Exact renormalized next-token law at ``s``: P(a) * beta(next) / beta(s)."""
        b = self.beta[s]
        if not b:
            raise Infeasible("no feasible completion from this state")
        out = []
        for tok, p, n in self.successors(s):
            mass = p if n is None else p * self.beta[n]
            if mass:
                out.append((tok, mass / b, n))
        return out

    def path_probability(self, x: Sequence[int]) -> Fraction:
        """Probability the exact sampler emits ``x``: the product of its renormalized steps."""
        x = check_complete(x, self.model.vocab)
        s: ProductState | None = self.initial
        prob = ONE
        for tok in x:
            if s is None or not self.beta.get(s):
                return ZERO
            for t, q, n in self.step_distribution(s):
                if t == tok:
                    prob *= q
                    s = n
                    break
            else:
                return ZERO
        return prob

    def implied_conditional(self) -> dict[Seq, Fraction]:
        """Every sequence the sampler can emit, with its step-rule probability."""
        out: dict[Seq, Fraction] = {}
        if not self.z:
            return out
        stack: list[tuple[ProductState, Seq, Fraction]] = [(self.initial, (), ONE)]
        while stack:
            s, prefix, prob = stack.pop()
            for tok, q, n in self.step_distribution(s):
                if n is None:
                    out[prefix + (tok,)] = prob * q
                else:
                    stack.append((n, prefix + (tok,), prob * q))
        return out

    def sample(self, rng: random.Random) -> Seq:
        if not self.z:
            raise Infeasible("constraint has zero probability under the model")
        s: ProductState | None = self.initial
        out: list[int] = []
        while s is not None:
            sampler = self._samplers.get(s)
            if sampler is None:
                steps = self.step_distribution(s)
                sampler = self._samplers[s] = _StepSampler(steps)
            tok, s = sampler.draw(rng)
            out.append(tok)
        return tuple(out)

    def viterbi(self) -> MapResult | None:
        prob, _, _ = self.best[self.initial]
        if not prob:
            return None
        s: ProductState | None = self.initial
        out: list[int] = []
        while s is not None:
            _, _, tok = self.best[s]
            out.append(tok)
            s = next(n for t, _, n in self.successors(s) if t == tok)
        return MapResult(tuple(out), prob)

    def dump(self) -> str:
        """Text rendering, one line per product state: context | automaton | budget | steps | beta."""
        vocab = self.model.vocab
        lines = ["# context | automaton_state | budget_remaining | steps_remaining | beta"]
        def key(s):
            return (s.model_state, s.automaton_state, s.budget_remaining or 0, s.steps_remaining or 0)
        for s in sorted(self.beta, key=key):
            fields = [
                vocab.render(s.model_state) or "-",
                str(s.automaton_state),
                "-" if s.budget_remaining is None else str(s.budget_remaining),
                "-" if s.steps_remaining is None else str(s.steps_remaining),
                str(self.beta[s]),
            ]
            lines.append(" | ".join(fields))
        return "\n".join(lines) + "\n"

    def __len__(self) -> int:
        return len(self.beta)


class _StepSampler:
    __slots__ = ("_rows", "_sampler")

    def __init__(self, steps):
        self._rows = [(t, n) for t, _, n in steps]
        self._sampler = RowSampler([q for _, q, _ in steps])

    def draw(self, rng):
        return self._rows[self._sampler.draw(rng)]


def backward_masses(model: MarkovModel, constraint: ConstraintAutomaton,
                    max_states: int = DEFAULT_MAX_STATES) -> ContinuationTable:
    return ContinuationTable(model, constraint, max_states)


def exact_z(model: MarkovModel, constraint: ConstraintAutomaton,
            table: ContinuationTable | None = None) -> Fraction:
    return (table or backward_masses(model, constraint)).z


def exact_constrained_sample(model: MarkovModel, constraint: ConstraintAutomaton,
                             table: ContinuationTable | None = None,
                             seed: int | random.Random = 0) -> Seq:
    table = table or backward_masses(model, constraint)
    rng = seed if isinstance(seed, random.Random) else make_rng(seed)
    return table.sample(rng)


def viterbi_map(model: MarkovModel, constraint: ConstraintAutomaton,
                table: ContinuationTable | None = None) -> MapResult | None:
    return (table or backward_masses(model, constraint)).viterbi()
