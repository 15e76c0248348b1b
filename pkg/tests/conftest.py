import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_basis(rng, n, k):
    q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    return q


def random_dictionary(rng, m, n, r):
    d = rng.standard_normal((m, n, r))
    return d / np.linalg.norm(d.reshape(m, -1), axis=1)[:, None, None]


def pytest_terminal_summary(terminalreporter):
    import sys

    results = getattr(sys.modules.get("test_acceptance"), "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
