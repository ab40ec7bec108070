from __future__ import annotations

import pytest

from arexact.armodel import uniform_iid
from arexact.constraints import FixedLengthConstraint, MetricalConstraint, compile_constraint
from arexact.shipped import load_instances

from _acceptance import RESULTS as ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance")
    for num in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {text}")


@pytest.fixture(scope="session")
def instances():
    return {inst.name: inst for inst in load_instances()}


@pytest.fixture(scope="session")
def uniform():
    return uniform_iid(["a", "b", "eos"])


@pytest.fixture(scope="session")
def fixed3(uniform):
    return compile_constraint(FixedLengthConstraint(3), uniform.vocab)


@pytest.fixture(scope="session")
def metrical(uniform):
    return compile_constraint(MetricalConstraint((1, 2, 0), 2), uniform.vocab)
