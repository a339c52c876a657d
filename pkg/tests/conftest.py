import itertools
from collections import deque

import pytest

from adalloc import generate_synthetic

ACCEPTANCE_LINES: list[str] = []


def bfs_reach(num_users, live_edges, seeds):
    """Plain BFS over live edges; independent of the package's reach masks."""
    adj = {u: [] for u in range(num_users)}
    for e in live_edges:
        adj[e.src].append(e.dst)
    seen = set(seeds)
    queue = deque(seeds)
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def exact_spread_bruteforce(graph, ad, seeds):
    """Expected reach by summing over every live-edge pattern, no merging."""
    edges = graph.edges(ad)
    total = 0.0
    for bits in itertools.product((0, 1), repeat=len(edges)):
        w = 1.0
        for e, b in zip(edges, bits):
            w *= e.prob if b else 1 - e.prob
        live = [e for e, b in zip(edges, bits) if b]
        total += w * len(bfs_reach(graph.num_users, live, seeds))
    return total


def subsets(items):
    items = list(items)
    return itertools.chain.from_iterable(itertools.combinations(items, r) for r in range(len(items) + 1))


@pytest.fixture
def half_chain():
    return generate_synthetic("chain", 3, 1, 0.5)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
