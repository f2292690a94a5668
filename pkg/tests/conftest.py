import random

import pytest

from ftconn.graph import Graph, generate
from ftconn.labels import build_labels


def kary_graph(seed, n_range=(20, 120), k_range=(3, 9), extra=10):
    """Shuffled k-ary tree plus a few random chords: deep hierarchies."""
    rnd = random.Random(seed)
    k = rnd.randint(*k_range)
    n = rnd.randint(*n_range)
    edges = {(min((v - 1) // k, v), v) for v in range(1, n)}
    for _ in range(rnd.randint(0, max(1, n // extra))):
        a, b = rnd.sample(range(n), 2)
        edges.add((min(a, b), max(a, b)))
    perm = list(range(n))
    rnd.shuffle(perm)
    return Graph.from_edges(n, [(perm[a], perm[b]) for a, b in edges])


def hub_graph(seed, n_range=(16, 80)):
    """A few hubs with many pendant-ish neighbours and sparse cross links."""
    rnd = random.Random(seed)
    n = rnd.randint(*n_range)
    hubs = rnd.sample(range(n), rnd.randint(1, 4))
    edges = set()
    for v in range(n):
        if v in hubs:
            continue
        h = rnd.choice(hubs)
        edges.add((min(v, h), max(v, h)))
    for _ in range(rnd.randint(0, n // 4)):
        a, b = rnd.sample(range(n), 2)
        edges.add((min(a, b), max(a, b)))
    for a, b in zip(hubs, hubs[1:]):
        edges.add((min(a, b), max(a, b)))
    return Graph.from_edges(n, edges)


def small_random_graph(seed, n_max=10):
    rnd = random.Random(seed)
    n = rnd.randint(2, n_max)
    p = rnd.choice([0.2, 0.3, 0.45, 0.6])
    return generate("gnp", n, p, seed=seed)


def mixed_graphs(count, seed=0):
    out = []
    for i in range(count):
        kind = i % 3
        if kind == 0:
            out.append(kary_graph(seed + i))
        elif kind == 1:
            out.append(hub_graph(seed + i))
        else:
            n = random.Random(seed + i).randint(10, 90)
            out.append(generate("gnp", n, 3.0 / n, seed=seed + i))
    return out


_BUILD_CACHE = {}


def cached_build(key, g, f, seed=0, **kw):
    if key not in _BUILD_CACHE:
        _BUILD_CACHE[key] = build_labels(g, f, seed, **kw)
    return _BUILD_CACHE[key]


@pytest.fixture(scope="session")
def star9_f1():
    return cached_build("star9_f1", generate("star", 9), 1, seed=1)


@pytest.fixture(scope="session")
def gnp64_f2():
    return cached_build("gnp64_f2", generate("gnp", 64, 0.06, seed=4), 2, seed=2)


@pytest.fixture(scope="session")
def kary_f2():
    return cached_build("kary_f2", kary_graph(12, n_range=(50, 60)), 2, seed=3)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
