"""Regenerate the shipped DIMACS corpus (deterministic)."""

import random
from itertools import combinations
from pathlib import Path

from arexact.gadget import CnfFormula, count_models_bruteforce

OUT = Path(__file__).resolve().parent.parent / "src" / "arexact" / "fixtures" / "cnf"


def pigeonhole(holes: int) -> CnfFormula:
    pigeons = holes + 1
    var = lambda p, h: p * holes + h + 1
    clauses = [tuple(var(p, h) for h in range(holes)) for p in range(pigeons)]
    for h in range(holes):
        for p, q in combinations(range(pigeons), 2):
            clauses.append((-var(p, h), -var(q, h)))
    return CnfFormula(pigeons * holes, tuple(clauses))


def random_kcnf(rng, m, n, k=3):
    return CnfFormula(m, tuple(
        tuple(rng.choice((1, -1)) * v for v in rng.sample(range(1, m + 1), min(k, m)))
        for _ in range(n)
    ))


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    fixed = {
        "empty_m0": CnfFormula(0, ()),
        "or2": CnfFormula(2, ((1, 2),)),
        "contradiction": CnfFormula(1, ((1,), (-1,))),
        "xor2": CnfFormula(2, ((1, 2), (-1, -2))),
        "unit_pos": CnfFormula(1, ((1,),)),
        "tautology": CnfFormula(2, ((1, -1), (2,))),
        "xnor3_unsat": CnfFormula(3, ((1, 2), (-1, -2), (2, 3), (-2, -3), (1, 3), (-1, -3))),
        "php_3_2": pigeonhole(2),
        "php_4_3": pigeonhole(3),
        "chain12": CnfFormula(12, tuple((-i, i + 1) for i in range(1, 12)) + ((1,), (-12,))),
        "single_model12": CnfFormula(12, tuple((i,) for i in range(1, 13))),
    }
    rng = random.Random(20261015)
    for i, (m, ratio) in enumerate([(4, 3), (5, 4), (6, 5), (6, 7), (7, 4), (8, 4.5), (8, 7), (9, 4),
                                    (9, 6), (10, 4.2), (10, 6.5), (11, 4), (11, 7), (12, 3.5),
                                    (12, 4.3), (12, 8), (5, 9), (7, 10), (12, 10), (3, 8)]):
        fixed[f"rand3_{i:02d}_m{m}"] = random_kcnf(rng, m, int(m * ratio))
    for name, f in fixed.items():
        assert f.num_vars <= 12
        count = count_models_bruteforce(f)
        header = f"c {name}: {count} satisfying assignment(s) by truth table\n"
        (OUT / f"{name}.cnf").write_text(header + f.to_dimacs())
        print(name, f.num_vars, count)


if __name__ == "__main__":
    main()
