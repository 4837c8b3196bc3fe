import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from graphlp.graph import Graph

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def random_graph(rng, n_min=2, n_max=50, extra=1.0, frontier_frac=0.0):
    """Connected random graph: random recursive tree plus ``extra * n`` random chords."""
    n = int(rng.integers(n_min, n_max + 1))
    edges = {(int(rng.integers(i)), i) for i in range(1, n)}
    for _ in range(int(extra * n)):
        u, v = rng.integers(n, size=2)
        if u != v:
            edges.add((int(min(u, v)), int(max(u, v))))
    frontier = []
    if frontier_frac > 0 and n > 2:
        cand = np.arange(1, n)
        k = max(1, int(frontier_frac * n))
        frontier = rng.choice(cand, size=min(k, n - 2), replace=False).tolist()
    return Graph.from_edges(n, sorted(edges), root=0, frontier=frontier, label=f"random {n}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
