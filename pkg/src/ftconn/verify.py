"""Property suites over built structures.

Each check returns a list of human-readable violations; an empty list means
the property holds.  The CLI ``verify`` command and the test-suite share them.
"""

from __future__ import annotations

import math
from collections import deque

from .graph import Graph
from .hierarchy import BaseHierarchy, CoarseHierarchy


def _induced_connected(g: Graph, verts) -> bool:
    verts = set(verts)
    if not verts:
        return True
    start = next(iter(verts))
    seen = {start}
    queue = deque([start])
    while queue:
        a = queue.popleft()
        for b in g.adj[a]:
            if b in verts and b not in seen:
                seen.add(b)
                queue.append(b)
    return len(seen) == len(verts)


def check_base(g: Graph, h: BaseHierarchy) -> dict[str, list[str]]:
    n = g.n
    logn = math.log2(n) if n > 1 else 0.0
    out: dict[str, list[str]] = {}
    out["height"] = [] if h.L <= logn - 1 or n <= 1 else [f"L={h.L} > log2(n)-1={logn - 1:.3f}"]

    rel = []
    for u, v in g.sorted_edges():
        a, b = h.comp_of[u], h.comp_of[v]
        if not (h.is_ancestor(a, b) or h.is_ancestor(b, a)):
            rel.append(f"edge ({u},{v}) joins unrelated components")
    out["edge_ancestry"] = rel

    conn = []
    for c in range(len(h)):
        if not _induced_connected(g, h.subtree[c]):
            conn.append(f"V(H0_{c}) not connected")
        for ch in h.children[c]:
            sub = h.subtree[ch]
            if not any(w in sub for v in h.members[c] for w in g.adj[v]):
                conn.append(f"no edge from {c} into child subtree {ch}")
    out["subtree_connected"] = conn

    deg4 = []
    for c in range(len(h)):
        deg: dict[int, int] = {}
        verts = set()
        for u, v in h.steiner_edges[c]:
            deg[u] = deg.get(u, 0) + 1
            deg[v] = deg.get(v, 0) + 1
            verts |= {u, v}
        if deg and max(deg.values()) > 4:
            deg4.append(f"T0({c}) has degree {max(deg.values())}")
        if len(h.members[c]) > 1 and not set(h.members[c]) <= verts:
            deg4.append(f"T0({c}) misses members")
    out["steiner_degree"] = deg4

    tdeg = max(h.t_union_degrees(), default=0)
    out["t_union_degree"] = [] if tdeg <= 2 * logn or n <= 1 else [f"max T-union degree {tdeg} > {2 * logn:.3f}"]
    return out


def check_coarse(g: Graph, h0: BaseHierarchy, h: CoarseHierarchy) -> dict[str, list[str]]:
    n = g.n
    logn = math.log2(n) if n > 1 else 0.0
    out: dict[str, list[str]] = {}

    coarse = []
    for K, m in enumerate(h.members):
        gammas = {h0.comp_of[v] for v in m}
        for c in gammas:
            if h0.parent[c] != -1 and h0.parent[c] not in gammas and c != h.tops[K]:
                coarse.append(f"component {K + 1} is not a connected H0 subtree")
                break
        if not _induced_connected(g, h.subtree[K]):
            coarse.append(f"V(H_K{K + 1}) not connected")
    out["coarsening"] = coarse

    trees = []
    for K, m in enumerate(h.members):
        if len(h.tree_edges(K)) != len(m) - 1:
            trees.append(f"T(K{K + 1}) is not a spanning tree")
        for u, v in h.tree_edges(K):
            if not g.has_edge(u, v):
                trees.append(f"tree edge ({u},{v}) not in G")
    out["spanning_trees"] = trees

    worst = max((h.tree_degree(v) for v in range(n) if v not in h.S), default=0)
    out["tree_degree"] = [] if worst <= 3 * logn or n <= 1 else [f"non-S degree {worst} > {3 * logn:.3f}"]

    nb = []
    for K in range(len(h)):
        for u in h.neighbors[K]:
            Ku = h.comp_of[u]
            if Ku == K or not h.is_ancestor(Ku, K):
                nb.append(f"N(H_K{K + 1}) vertex {u} not in a strict ancestor")
    out["neighbor_ancestry"] = nb
    return out


def failures(report: dict[str, list[str]]) -> list[str]:
    return [f"{k}: {msg}" for k, msgs in report.items() for msg in msgs]
