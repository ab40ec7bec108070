"""Measure how far heuristic decoders drift from the exact constrained law."""

from __future__ import annotations

import decimal
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from .armodel import ZERO, ArModel, MarkovModel, Seq
from .constraints import ConstraintAutomaton, accepts
from .decoders import DecoderConfig, MaskedSampler, RejectionSampler, beam_decode, greedy_decode
from .dynprog import ContinuationTable, TableTooLarge, UnboundedConstraint
from .oracle import BudgetExceeded, DEFAULT_BUDGET, HorizonRequired, exact_conditional
from .rng import derive_seed, trial_rngs

DEFAULT_MAX_SUPPORT = 100_000
KL_DIGITS = 30


class ReferenceUnavailable(ValueError):
    """The exact conditional for an instance could not be computed."""

    def __init__(self, msg: str, over_budget: bool = False):
        super().__init__(msg)
        self.over_budget = over_budget


@dataclass(frozen=True)
class Instance:
    name: str
    model: ArModel
    constraint: ConstraintAutomaton
    horizon: int | None = None


@dataclass(frozen=True)
class SequenceRow:
    sequence: str
    exact: Fraction
    empirical: Fraction
    count: int


@dataclass(frozen=True)
class BiasReport:
    instance: str
    decoder: str
    reference_engine: str
    seed: int
    z: Fraction
    exact_support_size: int
    samples_requested: int
    samples_feasible: int
    dead_ends: int
    rejections: int
    exhausted: int
    coverage: Fraction
    tv_distance: Fraction
    kl_empirical_to_exact: str | None
    table: tuple[SequenceRow, ...] = field(default=())

    @property
    def kl_defined(self) -> bool:
        return self.kl_empirical_to_exact is not None


@dataclass
class SweepResult:
    reports: list[BiasReport]
    refusals: list[tuple[str, str, str]]


def exact_reference(instance: Instance, budget: int = DEFAULT_BUDGET,
                    max_support: int = DEFAULT_MAX_SUPPORT) -> tuple[dict[Seq, Fraction], Fraction, str]:
    """Exact conditional law, its normalizer, and the engine that produced it."""
    model, con = instance.model, instance.constraint
    try:
        if isinstance(model, MarkovModel) and instance.horizon is None:
            table = ContinuationTable(model, con)
            if not table.z:
                raise ReferenceUnavailable(f"{instance.name}: constraint has probability 0")
            size = table.support_size()
            if size > max_support:
                raise ReferenceUnavailable(
                    f"{instance.name}: exact support has {size} sequences (limit {max_support})", over_budget=True)
            law = table.implied_conditional()
            engine = "dynprog"
            z = table.z
        else:
            cond = exact_conditional(model, con, instance.horizon, budget)
            if cond is None:
                raise ReferenceUnavailable(f"{instance.name}: constraint has probability 0")
            law, z, engine = cond.as_dict(), cond.normalizer, "oracle"
    except (BudgetExceeded, TableTooLarge) as exc:
        raise ReferenceUnavailable(f"{instance.name}: {exc}", over_budget=True) from None
    except (UnboundedConstraint, HorizonRequired) as exc:
        raise ReferenceUnavailable(f"{instance.name}: {exc}") from None
    if len(law) > max_support:
        raise ReferenceUnavailable(
            f"{instance.name}: exact support has {len(law)} sequences (limit {max_support})", over_budget=True)
    return law, z, engine


def total_variation(p: dict, q: dict) -> Fraction:
    keys = set(p) | set(q)
    return sum((abs(p.get(k, ZERO) - q.get(k, ZERO)) for k in keys), ZERO) / 2


def kl_divergence(p: dict, q: dict, digits: int = KL_DIGITS) -> str | None:
    """KL(p || q) as a decimal string, or None when some p-mass sits where q is 0."""
    with decimal.localcontext() as ctx:
        ctx.prec = digits + 10
        total = decimal.Decimal(0)
        for k, pk in p.items():
            if not pk:
                continue
            qk = q.get(k, ZERO)
            if not qk:
                return None
            ratio = pk / qk
            ln = (decimal.Decimal(ratio.numerator) / decimal.Decimal(ratio.denominator)).ln()
            total += decimal.Decimal(pk.numerator) / decimal.Decimal(pk.denominator) * ln
        ctx.prec = digits
        return str(+total)


def run_experiment(instance: Instance, decoder: DecoderConfig, num_trials: int, seed: int,
                   budget: int = DEFAULT_BUDGET, reference=None) -> BiasReport:
    """Run ``num_trials`` decodes and compare their law with the exact conditional.

    Trials draw from :func:`arexact.rng.trial_rngs`. Greedy and beam ignore
    randomness, so they are decoded once and the outcome counted for every
    trial.
    """
    if num_trials < 1:
        raise ValueError("num_trials must be >= 1")
    law, z, engine = reference or exact_reference(instance, budget)
    model, con = instance.model, instance.constraint
    steps = decoder.max_steps or instance.horizon

    counts: Counter[Seq] = Counter()
    dead = rejections = exhausted = 0

    if decoder.deterministic:
        if decoder.kind == "greedy":
            res = greedy_decode(model, con, steps)
        else:
            res = beam_decode(model, con, decoder.beam_width, steps)
        if res.ok:
            counts[res.sequence] = num_trials
        else:
            dead = num_trials
    elif decoder.kind == "rejection":
        sampler = RejectionSampler(model, con, steps)
        for rng in trial_rngs(seed, num_trials):
            res = sampler.sample(rng, decoder.max_attempts)
            rejections += res.attempts - (1 if res.ok else 0)
            if res.ok:
                counts[res.sequence] += 1
            else:
                exhausted += 1
    elif decoder.kind == "masked-ancestral":
        sampler = MaskedSampler(model, con, steps)
        for rng in trial_rngs(seed, num_trials):
            res = sampler.sample(rng)
            if res.ok:
                counts[res.sequence] += 1
            else:
                dead += 1
    elif decoder.kind == "exact":
        if not isinstance(model, MarkovModel):
            raise ReferenceUnavailable("the exact sampler needs a Markov model")
        table = ContinuationTable(model, con)
        for rng in trial_rngs(seed, num_trials):
            counts[table.sample(rng)] += 1
    else:
        raise ValueError(f"unsupported decoder {decoder.kind}")

    for x in counts:
        if not accepts(con, x):
            raise AssertionError(f"decoder {decoder.label()} produced infeasible {x}")

    feasible = sum(counts.values())
    empirical = {x: Fraction(c, feasible) for x, c in counts.items()} if feasible else {}
    vocab = model.vocab
    keys = sorted(set(law) | set(counts), key=lambda x: (-law.get(x, ZERO), len(x), x))
    table_rows = tuple(
        SequenceRow(vocab.render(x), law.get(x, ZERO), empirical.get(x, ZERO), counts.get(x, 0))
        for x in keys
    )
    covered = sum(1 for x in counts if x in law)
    return BiasReport(
        instance=instance.name,
        decoder=decoder.label(),
        reference_engine=engine,
        seed=seed,
        z=z,
        exact_support_size=len(law),
        samples_requested=num_trials,
        samples_feasible=feasible,
        dead_ends=dead,
        rejections=rejections,
        exhausted=exhausted,
        coverage=Fraction(covered, len(law)),
        tv_distance=total_variation(empirical, law) if feasible else Fraction(1),
        kl_empirical_to_exact=kl_divergence(empirical, law) if feasible else None,
        table=table_rows,
    )


def sweep(instances: list[Instance], decoders: list[DecoderConfig], trials: int, seed: int,
          budget: int = DEFAULT_BUDGET) -> SweepResult:
    """One report per (instance, decoder); instance ``i``, decoder ``j`` uses seed ``derive_seed(seed, i, j)``."""
    reports: list[BiasReport] = []
    refusals: list[tuple[str, str, str]] = []
    for i, inst in enumerate(instances):
        try:
            ref = exact_reference(inst, budget)
        except ReferenceUnavailable as exc:
            refusals.append((inst.name, "*", str(exc)))
            continue
        for j, dec in enumerate(decoders):
            try:
                reports.append(run_experiment(inst, dec, trials, derive_seed(seed, i, j), budget, ref))
            except (ReferenceUnavailable, ValueError) as exc:
                refusals.append((inst.name, dec.label(), str(exc)))
    return SweepResult(reports, refusals)
