import random

import pytest

from ftconn.decomp import DecompError, DecompResult, check_decomp, decomp
from ftconn.graph import Graph, generate

from conftest import hub_graph, kary_graph


def test_star_blocks_center():
    g = generate("star", 9)
    res = decomp(g, range(10), 4)
    assert res.bad == frozenset({0})
    assert check_decomp(g, res, 4) == []
    adj = res.adjacency()
    assert max(sum(1 for w in adj[v] if w not in res.bad) for v in res.tree_vertices - res.bad) == 0


def test_path_needs_no_blockers():
    g = generate("path", 8)
    res = decomp(g, range(8), 4)
    assert res.bad == frozenset()
    assert res.tree_edges == frozenset(g.edges)


def test_cycle_gives_hamiltonian_path():
    g = generate("cycle", 8)
    res = decomp(g, range(8), 4)
    assert res.bad == frozenset()
    assert len(res.tree_edges) == 7 and res.tree_vertices == frozenset(range(8))
    degs = [len(x) for x in res.adjacency().values()]
    assert max(degs) == 2


def test_small_terminal_sets_need_no_blockers():
    rng = random.Random(1)
    for seed in range(40):
        g = generate("gnp", 30, 0.2, seed=seed)
        U = rng.sample(range(30), rng.randint(1, 4))
        assert decomp(g, U, 4).bad == frozenset()


def test_rejects_small_threshold():
    with pytest.raises(ValueError):
        decomp(generate("path", 3), [0, 1], 2)


def test_checker_flags_broken_results():
    g = generate("star", 9)
    good = decomp(g, range(10), 4)
    unblocked = DecompResult(good.terminals, good.tree_vertices, good.tree_edges, frozenset())
    assert any("degree" in m for m in check_decomp(g, unblocked, 4))
    phantom = DecompResult(good.terminals, good.tree_vertices, good.tree_edges | {(1, 2)}, good.bad)
    assert any("not in G" in m for m in check_decomp(g, phantom, 4))
    missing = DecompResult(good.terminals, frozenset({0}), frozenset(), good.bad)
    assert check_decomp(g, missing, 4)


def test_checker_flags_unseparated_trees():
    # two trees of T - B joined by a path avoiding B
    g = generate("path", 4)
    res = DecompResult(frozenset({0, 3}), frozenset({0, 3}), frozenset(), frozenset())
    assert check_decomp(g, res, 4)


@pytest.mark.parametrize("s", [3, 4, 5])
def test_contract_on_random_instances(s):
    rng = random.Random(s)
    graphs = [kary_graph(i) for i in range(15)] + [hub_graph(i) for i in range(15)]
    graphs += [generate("gnp", 60, 0.08, seed=i) for i in range(10)]
    for g in graphs:
        U = rng.sample(range(g.n), rng.randint(1, g.n))
        res = decomp(g, U, s, check=False)
        assert check_decomp(g, res, s) == []


def test_disconnected_terminals_get_one_tree_per_component():
    g = Graph.from_edges(8, [(0, 1), (1, 2), (4, 5), (5, 6), (6, 7)])
    res = decomp(g, [0, 2, 4, 7], 4)
    assert check_decomp(g, res, 4) == []
    assert {(0, 1), (1, 2)} <= res.tree_edges
    assert 3 not in res.tree_vertices


def test_error_type_is_runtime_error():
    assert issubclass(DecompError, RuntimeError)
