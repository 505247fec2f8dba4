import numpy as np
import pytest

from specfinder.hamiltonian import PairHamiltonian, random_hamiltonian


def random_hermitian(dim, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2


@pytest.fixture
def h3():
    return random_hamiltonian(3, seed=7)


@pytest.fixture
def zz2():
    return PairHamiltonian.from_terms(2, [], [(0, 1, "z", "z", 1.0)])


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS, key=lambda k: (int(k[1:].rstrip("R")), k)):
            terminalreporter.write_line(RESULTS[key])
