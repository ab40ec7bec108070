from fractions import Fraction as F

import pytest

from arexact.armodel import MarkovModel, Vocabulary
from arexact.constraints import FixedLengthConstraint, compile_constraint
from arexact.gadget import B0, BIT0, BIT1, EOS, GADGET_VOCAB, CnfFormula, build_gadget
from arexact.oracle import (BudgetExceeded, HorizonRequired, certificate_check, enumerate_support,
                            exact_conditional, exact_map, map_threshold, threshold_witness)
from arexact.verify import reduction_unary_constraint

OR2 = build_gadget(CnfFormula(2, ((1, 2),)))
CONTRA = build_gadget(CnfFormula(1, ((1,), (-1,))))


def test_enumerate_unsat_gadget():
    sup = enumerate_support(CONTRA, 3)
    assert len(sup.entries) == 4
    assert all(p == F(1, 4) for _, p in sup.entries)
    assert sup.residual_mass == 0


def test_enumerate_uniform_two_steps(uniform):
    sup = enumerate_support(uniform, 2)
    assert dict(sup.entries) == {(2,): F(1, 3), (0, 2): F(1, 9), (1, 2): F(1, 9)}
    assert sup.residual_mass == F(4, 9)
    assert [x for x, _ in sup.entries] == [(2,), (0, 2), (1, 2)]


def test_enumerate_one_step():
    m = MarkovModel(Vocabulary.of(["a", "eos"]), 0, {(): [F(1), F(0)]})
    sup = enumerate_support(m, 1)
    assert sup.entries == () and sup.residual_mass == 1


def test_budget_refusal_carries_estimate(uniform):
    with pytest.raises(BudgetExceeded) as info:
        enumerate_support(uniform, 12, budget=100)
    assert info.value.estimate == 2**12 - 1
    assert "4095" in str(info.value)


def test_map_examples():
    best = exact_map(OR2, 4)
    assert best.sequence[-1] == EOS and len(best.sequence) == 3
    assert best.probability == F(1, 4)
    assert exact_map(CONTRA, 3).sequence == (BIT0, B0, EOS)


def test_map_unsat_unary_is_infeasible():
    unary = compile_constraint(reduction_unary_constraint(1), GADGET_VOCAB)
    assert exact_map(CONTRA, constraint=unary) is None


def test_map_needs_horizon(uniform):
    with pytest.raises(HorizonRequired):
        exact_map(uniform)


def test_threshold():
    assert map_threshold(OR2, 3, F(1, 4))
    assert not map_threshold(CONTRA, 2, F(1, 2))
    assert threshold_witness(CONTRA, 2, 0) is not None
    with pytest.raises(ValueError):
        threshold_witness(OR2, 0, F(1, 2))


def test_certificates():
    assert certificate_check(OR2, (BIT1, BIT0, EOS), F(1, 4))
    assert not certificate_check(OR2, (BIT0, BIT0, B0, EOS), F(1, 4))
    assert certificate_check(OR2, (BIT0, BIT0, EOS), 0)


def test_conditional_examples(uniform, fixed3, metrical):
    z = exact_conditional(OR2, compile_constraint(FixedLengthConstraint(3), GADGET_VOCAB)).normalizer
    assert z == F(3, 4)
    cond = exact_conditional(uniform, fixed3)
    assert cond.normalizer == F(4, 27)
    assert set(cond.as_dict().values()) == {F(1, 4)} and len(cond.support) == 4
    met = exact_conditional(uniform, metrical)
    assert met.normalizer == F(4, 27)
    assert met.as_dict() == {(1, 2): F(3, 4), (0, 0, 2): F(1, 4)}


def test_conditional_zero_mass_is_none():
    fixed = compile_constraint(FixedLengthConstraint(2), GADGET_VOCAB)
    assert exact_conditional(OR2, fixed) is None
