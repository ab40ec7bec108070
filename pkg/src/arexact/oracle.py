"""Brute-force exact inference by bounded enumeration of complete sequences.

This is the deliberately naive ground truth: depth-first expansion of every
prefix up to a horizon, pruning only zero-probability branches. Everything
else in the package is checked against it at desk scale.

Canonical order of sequences is shorter first, then lexicographic by token
index; MAP ties are broken toward the canonically smallest sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .armodel import ONE, ZERO, ArModel, Seq, sequence_probability
from .constraints import ConstraintAutomaton, accepts

DEFAULT_BUDGET = 10**7


class BudgetExceeded(RuntimeError):
    def __init__(self, visited: int, budget: int, estimate: int):
        self.visited, self.budget, self.estimate = visited, budget, estimate
        super().__init__(
            f"enumeration visited more than {budget} prefixes "
            f"(worst case for this horizon: {estimate} prefixes)"
        )


class HorizonRequired(ValueError):
    """No horizon given and the constraint does not bound sequence length."""


def canonical_key(seq: Seq) -> tuple[int, Seq]:
    return (len(seq), seq)


@dataclass(frozen=True)
class EnumeratedSupport:
    entries: tuple[tuple[Seq, Fraction], ...]
    horizon: int
    residual_mass: Fraction

    def total(self) -> Fraction:
        return sum((p for _, p in self.entries), ZERO) + self.residual_mass


@dataclass(frozen=True)
class MapResult:
    sequence: Seq
    probability: Fraction


@dataclass(frozen=True)
class ConditionalDistribution:
    support: tuple[tuple[Seq, Fraction], ...]
    normalizer: Fraction

    def as_dict(self) -> dict[Seq, Fraction]:
        return dict(self.support)


def worst_case_prefixes(vocab_size: int, horizon: int) -> int:
    k = vocab_size - 1
    return sum(k**i for i in range(horizon))


def enumerate_support(model: ArModel, horizon: int, budget: int = DEFAULT_BUDGET) -> EnumeratedSupport:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    eos = model.vocab.eos
    entries: list[tuple[Seq, Fraction]] = []
    residual = ZERO
    visited = 0
    stack: list[tuple[Seq, Fraction]] = [((), ONE)]
    while stack:
        prefix, mass = stack.pop()
        visited += 1
        if visited > budget:
            raise BudgetExceeded(visited, budget, worst_case_prefixes(len(model.vocab), horizon))
        row = model.conditional(prefix)
        if row[eos]:
            entries.append((prefix + (eos,), mass * row[eos]))
        last_step = len(prefix) + 1 == horizon
        for tok in reversed(range(len(row))):
            p = row[tok]
            if tok == eos or not p:
                continue
            if last_step:
                residual += mass * p
            else:
                stack.append((prefix + (tok,), mass * p))
    entries.sort(key=lambda e: canonical_key(e[0]))
    return EnumeratedSupport(tuple(entries), horizon, residual)


def _resolve_horizon(horizon: int | None, constraint: ConstraintAutomaton | None) -> int:
    if horizon is not None:
        return horizon
    if constraint is not None:
        implied = constraint.implied_horizon()
        if implied is not None:
            return implied
    raise HorizonRequired("an explicit horizon is needed: the constraint does not bound sequence length")


def feasible_entries(support: EnumeratedSupport, constraint: ConstraintAutomaton | None):
    if constraint is None:
        return list(support.entries)
    return [(x, p) for x, p in support.entries if accepts(constraint, x)]


def exact_map(
    model: ArModel,
    horizon: int | None = None,
    constraint: ConstraintAutomaton | None = None,
    budget: int = DEFAULT_BUDGET,
    support: EnumeratedSupport | None = None,
) -> MapResult | None:
    """Most probable (feasible) complete sequence within the horizon, or None if infeasible."""
    if support is None:
        support = enumerate_support(model, _resolve_horizon(horizon, constraint), budget)
    best: tuple[Seq, Fraction] | None = None
    for x, p in feasible_entries(support, constraint):
        if best is None or p > best[1]:
            best = (x, p)
    return MapResult(*best) if best else None


def threshold_witness(
    model: ArModel,
    n: int,
    tau: Fraction,
    horizon: int | None = None,
    budget: int = DEFAULT_BUDGET,
    support: EnumeratedSupport | None = None,
) -> Seq | None:
    """A length-``n`` complete sequence with probability >= tau, if one exists."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if horizon is not None and horizon < n:
        raise ValueError("horizon must be at least n")
    tau = Fraction(tau)
    if support is None:
        support = enumerate_support(model, n, budget)
    for x, p in support.entries:
        if len(x) == n and p >= tau:
            return x
    if tau <= 0:
        # zero-probability sequences are not enumerated but still qualify
        filler = model.vocab.non_eos[0]
        return (filler,) * (n - 1) + (model.vocab.eos,)
    return None


def map_threshold(model: ArModel, n: int, tau: Fraction, horizon: int | None = None,
                  budget: int = DEFAULT_BUDGET, support: EnumeratedSupport | None = None) -> bool:
    return threshold_witness(model, n, tau, horizon, budget, support) is not None


def certificate_check(model: ArModel, x: Sequence[int], tau: Fraction) -> bool:
    """Polynomial-time verifier: multiply the local conditionals along x and compare."""
    return sequence_probability(model, x) >= Fraction(tau)


def exact_conditional(
    model: ArModel,
    constraint: ConstraintAutomaton,
    horizon: int | None = None,
    budget: int = DEFAULT_BUDGET,
    support: EnumeratedSupport | None = None,
) -> ConditionalDistribution | None:
    """Law of the model conditioned on the constraint, or None when Z = 0."""
    if support is None:
        support = enumerate_support(model, _resolve_horizon(horizon, constraint), budget)
    feasible = feasible_entries(support, constraint)
    z = sum((p for _, p in feasible), ZERO)
    if not z:
        return None
    return ConditionalDistribution(tuple((x, p / z) for x, p in feasible), z)
