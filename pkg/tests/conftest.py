import numpy as np
import pytest

from sapg.datagen import InstanceSpec, gen_instance, objective_for
from sapg.model import default_config


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_problem():
    """Seeded 40x80 l1-regression instance with default config."""
    inst = gen_instance(InstanceSpec(40, 80, 0.2, seed=7))
    return objective_for(inst), default_config(80)


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def report():
    """Record one pass/fail line per acceptance criterion; failures still fail the test."""

    def _report(criterion: str, ok: bool, detail: str):
        line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
