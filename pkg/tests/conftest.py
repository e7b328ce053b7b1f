import numpy as np
import pytest

from patrolchain.graph import PatrolGraph, builtin_sf


def random_chain(rng, n, positive=True):
    """Strictly positive (hence irreducible, aperiodic) row-stochastic matrix."""
    P = rng.random((n, n)) + (0.05 if positive else 0.0)
    return P / P.sum(axis=1, keepdims=True)


def complete_graph(n, weights=None):
    A = np.ones((n, n), dtype=int)
    return PatrolGraph(A, np.ones((n, n), dtype=int) if weights is None else weights)


@pytest.fixture(scope="session")
def sf():
    return builtin_sf()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = {}


def record_criterion(number, title, passed, detail):
    ACCEPTANCE[number] = (title, bool(passed), detail)
    print(f"criterion {number:>2} [{'PASS' if passed else 'FAIL'}] {title}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(
            f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}")
