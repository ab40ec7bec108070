"""CNF formulas and the SAT gadget autoregressive model built from them.

The gadget draws ``m`` uniform bits as a truth assignment. At step ``m+1`` it
checks the assignment against the formula: a model ends immediately with
eos, a non-model emits ``b0`` or ``b1`` (1/2 each) and then eos. Satisfying
sequences therefore carry probability ``2^-m`` and every other complete
sequence ``2^-(m+1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .armodel import ONE, ZERO, ArModel, Row, Seq, Vocabulary

GADGET_VOCAB = Vocabulary(("0", "1", "b0", "b1", "eos"), 4)
BIT0, BIT1, B0, B1, EOS = range(5)

HALF = Fraction(1, 2)
_BITS: Row = (HALF, HALF, ZERO, ZERO, ZERO)
_BRANCH: Row = (ZERO, ZERO, HALF, HALF, ZERO)
_STOP: Row = (ZERO, ZERO, ZERO, ZERO, ONE)

DEFAULT_COUNT_LIMIT = 24


class DimacsError(ValueError):
    def __init__(self, lineno: int | None, msg: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}" if lineno is not None else msg)


class EnumerationLimit(ValueError):
    """Truth-table enumeration refused because there are too many variables."""


@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.num_vars < 0:
            raise ValueError("num_vars must be nonnegative")
        object.__setattr__(self, "clauses", tuple(tuple(c) for c in self.clauses))
        for clause in self.clauses:
            if not clause:
                raise ValueError("empty clause")
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} out of range for {self.num_vars} variables")

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.num_vars} {len(self.clauses)}"]
        lines += [" ".join(map(str, c)) + " 0" for c in self.clauses]
        return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> CnfFormula:
    num_vars = num_clauses = None
    clauses: list[tuple[int, ...]] = []
    current: list[int] = []
    last_line = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        last_line = lineno
        if line.startswith("p"):
            parts = line.split()
            if num_vars is not None:
                raise DimacsError(lineno, "duplicate problem line")
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(lineno, "malformed header, expected 'p cnf <vars> <clauses>'")
            try:
                num_vars, num_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(lineno, "malformed header, counts must be integers") from None
            if num_vars < 0 or num_clauses < 0:
                raise DimacsError(lineno, "malformed header, negative count")
            continue
        if line.startswith("%"):
            # SATLIB trailer
            break
        if num_vars is None:
            raise DimacsError(lineno, "clause before 'p cnf' header")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(lineno, f"bad literal {tok!r}") from None
            if lit == 0:
                if not current:
                    raise DimacsError(lineno, "empty clause")
                clauses.append(tuple(current))
                current = []
            elif abs(lit) > num_vars:
                raise DimacsError(lineno, f"literal {lit} out of range (1..{num_vars})")
            else:
                current.append(lit)
    if num_vars is None:
        raise DimacsError(None, "missing 'p cnf' header")
    if current:
        raise DimacsError(last_line, "missing 0 terminator on last clause")
    if len(clauses) != num_clauses:
        raise DimacsError(last_line, f"header declares {num_clauses} clauses, found {len(clauses)}")
    return CnfFormula(num_vars, tuple(clauses))


def satisfies(formula: CnfFormula, assignment) -> bool:
    if len(assignment) != formula.num_vars:
        raise ValueError(f"assignment has {len(assignment)} bits, formula has {formula.num_vars} variables")
    return all(
        any((assignment[abs(lit) - 1] == 1) == (lit > 0) for lit in clause)
        for clause in formula.clauses
    )


def count_models_bruteforce(formula: CnfFormula, limit: int = DEFAULT_COUNT_LIMIT) -> int:
    """Exact model count by walking the full truth table."""
    m = formula.num_vars
    if m > limit:
        raise EnumerationLimit(f"{m} variables exceeds the truth-table limit of {limit}")
    # clause as (positive mask, negative mask) over bit i = variable i+1
    masks = []
    for clause in formula.clauses:
        pos = neg = 0
        for lit in clause:
            if lit > 0:
                pos |= 1 << (lit - 1)
            else:
                neg |= 1 << (-lit - 1)
        masks.append((pos, neg))
    count = 0
    for a in range(1 << m):
        if all((a & pos) or (~a & neg) for pos, neg in masks):
            count += 1
    return count


def all_assignments(m: int):
    return product((0, 1), repeat=m)


class GadgetModel(ArModel):
    """The autoregressive model P_phi over ``0 1 b0 b1 eos``.

    Clause satisfaction is evaluated on demand at step ``m+1``. Prefixes the
    construction never produces (a branch symbol among the first ``m``
    positions, or anything past step ``m+1``) get eos with probability 1 so
    that every row is still a distribution.
    """

    vocab = GADGET_VOCAB

    def __init__(self, formula: CnfFormula):
        self.formula = formula
        self.m = formula.num_vars

    def conditional(self, prefix: Seq) -> Row:
        n, m = len(prefix), self.m
        if n < m:
            return _BITS if all(t <= BIT1 for t in prefix) else _STOP
        if n == m:
            if any(t > BIT1 for t in prefix):
                return _STOP
            return _STOP if satisfies(self.formula, prefix) else _BRANCH
        return _STOP

    def __repr__(self):
        return f"GadgetModel(m={self.m}, clauses={len(self.formula.clauses)})"


def build_gadget(formula: CnfFormula) -> GadgetModel:
    if not isinstance(formula, CnfFormula):
        raise TypeError("build_gadget expects a CnfFormula")
    return GadgetModel(formula)
