import numpy as np
import pytest

from gsllab.graph import build_graph

ACCEPTANCE_LINES: list = []


def random_graph(seed, n=20, p=0.2, f=3, c=3):
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, 1)
    mask = rng.random(len(iu[0])) < p
    edges = np.stack([iu[0][mask], iu[1][mask]], axis=1)
    return build_graph(edges, n, rng.standard_normal((n, f)), rng.integers(c, size=n), c)


@pytest.fixture
def path3():
    return build_graph([(0, 1), (1, 2)], 3, np.array([[0.0], [6.0], [12.0]]), [0, 0, 1], 2)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
