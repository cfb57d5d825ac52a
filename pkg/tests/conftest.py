import numpy as np
import pytest

from photocount.states import (
    Cat,
    Coherent,
    Fock,
    Mixture,
    SqueezedVacuum,
    Thermal,
    Vacuum,
)

ACCEPTANCE_LINES: list[str] = []

LIBRARY_STATES = [
    Vacuum(),
    Coherent(0.7 - 0.4j),
    Fock(1),
    Fock(3),
    Thermal(0.6),
    SqueezedVacuum(0.5),
    Cat(1.5j),
    Mixture(((0.3, Fock(2)), (0.7, Coherent(0.5)))),
]


@pytest.fixture
def library_states():
    return list(LIBRARY_STATES)


@pytest.fixture
def record_criterion():
    def record(number: int, title: str, ok: bool, detail: str):
        ACCEPTANCE_LINES.append(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} | {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def rel_err(a, b):
    return np.abs(np.asarray(a) - np.asarray(b))
