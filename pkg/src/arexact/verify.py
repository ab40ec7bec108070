"""End-to-end check of the SAT and #SAT gadget identities on one formula."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .armodel import Seq
from .constraints import FixedLengthConstraint, UnaryConstraint, compile_constraint
from .gadget import BIT0, BIT1, EOS, GADGET_VOCAB, CnfFormula, build_gadget, count_models_bruteforce
from .oracle import (DEFAULT_BUDGET, certificate_check, enumerate_support, exact_conditional,
                     exact_map, threshold_witness)


@dataclass(frozen=True)
class GadgetVerification:
    num_vars: int
    num_clauses: int
    model_count: int
    map_sequence: Seq
    map_probability: Fraction
    map_decides_sat: bool
    z: Fraction
    z_counts_models: bool
    unary_optimum: Fraction | None
    unary_check: bool
    threshold_tau: Fraction
    threshold: bool
    threshold_witness: Seq | None
    threshold_check: bool
    certificate_valid: bool | None

    @property
    def satisfiable(self) -> bool:
        return self.model_count > 0

    @property
    def passed(self) -> bool:
        return all((self.map_decides_sat, self.z_counts_models, self.unary_check, self.threshold_check,
                    self.certificate_valid is not False))


def reduction_unary_constraint(m: int) -> UnaryConstraint:
    """Bits at positions 1..m, eos at position m+1."""
    return UnaryConstraint(tuple([frozenset({BIT0, BIT1})] * m + [frozenset({EOS})]))


def verify_gadget(formula: CnfFormula, budget: int = DEFAULT_BUDGET) -> GadgetVerification:
    m = formula.num_vars
    count = count_models_bruteforce(formula)
    model = build_gadget(formula)
    # one enumeration up to the longest gadget sequence serves every query
    support = enumerate_support(model, m + 2, budget)

    best = exact_map(model, support=support)
    decides = (best.sequence[m] == EOS) == (count > 0)

    fixed = compile_constraint(FixedLengthConstraint(m + 1), GADGET_VOCAB)
    cond = exact_conditional(model, fixed, support=support)
    z = cond.normalizer if cond else Fraction(0)

    unary = compile_constraint(reduction_unary_constraint(m), GADGET_VOCAB)
    constrained = exact_map(model, constraint=unary, support=support)
    tau = Fraction(1, 2**m)
    unary_opt = constrained.probability if constrained else None
    unary_ok = (unary_opt == tau) if count else (unary_opt is None)

    witness = threshold_witness(model, m + 1, tau, support=support)
    cert = certificate_check(model, witness, tau) if witness is not None else None

    return GadgetVerification(
        num_vars=m,
        num_clauses=len(formula.clauses),
        model_count=count,
        map_sequence=best.sequence,
        map_probability=best.probability,
        map_decides_sat=decides,
        z=z,
        z_counts_models=z * 2**m == count,
        unary_optimum=unary_opt,
        unary_check=unary_ok,
        threshold_tau=tau,
        threshold=witness is not None,
        threshold_witness=witness,
        threshold_check=(witness is not None) == (count > 0),
        certificate_valid=cert,
    )
