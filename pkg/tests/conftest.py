import sys
import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from trcolor.graph import Graph, complete_multipartite, cycle

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def brute_colorings(g, q=3, budget=0):
    """Plain itertools enumeration, independent of the backtracking oracle."""
    out = []
    for a in itertools.product(range(q + 1), repeat=g.n):
        if sum(1 for x in a if x == 0) > budget:
            continue
        if all(a[u] == 0 or a[u] != a[v] for u, v in g.edges):
            out.append(a)
    return sorted(out)


def brute_independent_sets(g, min_size=0):
    out = []
    for a in itertools.product((0, 1), repeat=g.n):
        if sum(a) >= min_size and not any(a[u] and a[v] for u, v in g.edges):
            out.append(a)
    return sorted(out)


@pytest.fixture
def k3():
    return complete_multipartite(3, 1)


@pytest.fixture
def k222():
    return complete_multipartite(3, 2)


@pytest.fixture
def c4():
    return cycle(4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[number])
