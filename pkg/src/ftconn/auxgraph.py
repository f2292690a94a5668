"""Typed auxiliary multigraph over a coarse hierarchy, its sparsification, and
reference (non-label) versions of the query-graph notions.

Edges are ``(u, v, type)`` triples with ``u < v`` when unoriented and
``(tail, head, type)`` once oriented.  Type 0 marks an original edge; type
``k >= 1`` marks a clique edge contributed by the component with id ``k``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .graph import Graph, UnionFind
from .hierarchy import CoarseHierarchy

ORIGINAL = 0


@dataclass
class AuxGraph:
    g: Graph
    h: CoarseHierarchy
    edges: list  # unoriented (u, v, type), sorted
    oriented: list | None = None  # (tail, head, type) after sparsification
    rounds: int = 0
    out_edges: list = field(default_factory=list)

    def vertex_depth(self, v: int) -> int:
        return self.h.depth[self.h.comp_of[v]]

    def edge_depth(self, e) -> int:
        return max(self.vertex_depth(e[0]), self.vertex_depth(e[1]))

    def active_edges(self) -> list:
        """Oriented edge list if sparsified, otherwise the full edge list."""
        return self.oriented if self.oriented is not None else self.edges

    def max_outdegree(self) -> int:
        return max((len(x) for x in self.out_edges), default=0)

    def dump(self) -> str:
        return "".join(f"{a} {b} {t}\n" for a, b, t in self.active_edges())


def build_aux_graph(g: Graph, h: CoarseHierarchy) -> AuxGraph:
    edges = [(u, v, ORIGINAL) for u, v in g.sorted_edges()]
    for K, nb in enumerate(h.neighbors):
        cid = h.comp_id(K)
        for i, a in enumerate(nb):
            for b in nb[i + 1 :]:
                edges.append((a, b, cid))
    edges.sort()
    return AuxGraph(g, h, edges)


def round_count(n: int, f: int, c_sparse: float = 4.0) -> int:
    logn = math.log2(n) if n > 1 else 1.0
    return max(1, math.ceil(c_sparse * f**3 * logn * logn))


def sparsify_orient(aux: AuxGraph, f: int, seed: int, c_sparse: float = 4.0) -> AuxGraph:
    """Union of depth-minimum spanning forests over sampled subgraphs.

    Vertices are kept with probability 1/(f+1) per round and clique types with
    probability 1/(f log2 n).  Each forest is oriented child-to-parent towards
    the smallest vertex of its tree; the first round that picks an edge fixes
    its orientation.
    """
    g, h = aux.g, aux.h
    n = g.n
    R = round_count(n, f, c_sparse)
    logn = math.log2(n) if n > 1 else 1.0
    p_vertex = 1.0 / (f + 1)
    p_type = min(1.0, 1.0 / (f * logn))
    rng = np.random.default_rng(seed)

    m = len(aux.edges)
    eu = np.array([e[0] for e in aux.edges], dtype=np.int64)
    ev = np.array([e[1] for e in aux.edges], dtype=np.int64)
    et = np.array([e[2] for e in aux.edges], dtype=np.int64)
    depth = np.array([aux.vertex_depth(v) for v in range(n)], dtype=np.int64)
    ed = np.maximum(depth[eu], depth[ev]) if m else np.zeros(0, dtype=np.int64)
    order = np.lexsort((et, ev, eu, ed))  # weight, then endpoints, then type
    eu, ev, et = eu[order], ev[order], et[order]
    ntypes = len(h) + 1

    chosen: dict[int, tuple[int, int, int]] = {}
    for _ in range(R):
        in_a = rng.random(n) < p_vertex
        in_b = rng.random(ntypes) < p_type
        in_b[ORIGINAL] = True
        if not m:
            continue
        keep = np.flatnonzero(in_a[eu] & in_a[ev] & in_b[et])
        if keep.size == 0:
            continue
        uf = UnionFind(n)
        forest: dict[int, list[tuple[int, int]]] = {}
        for idx in keep.tolist():
            a, b = int(eu[idx]), int(ev[idx])
            if uf.union(a, b):
                forest.setdefault(a, []).append((b, idx))
                forest.setdefault(b, []).append((a, idx))
        _orient_forest(forest, chosen, eu, ev, et, order)

    oriented = sorted(chosen.values())
    out: list[list] = [[] for _ in range(n)]
    for e in oriented:
        out[e[0]].append(e)
    aux.oriented = oriented
    aux.rounds = R
    aux.out_edges = out
    return aux


def _orient_forest(forest, chosen, eu, ev, et, order) -> None:
    seen: set[int] = set()
    for r in sorted(forest):
        if r in seen:
            continue
        seen.add(r)
        queue = deque([r])
        while queue:
            a = queue.popleft()
            for b, idx in forest[a]:
                if b in seen:
                    continue
                seen.add(b)
                queue.append(b)
                key = int(order[idx])
                if key not in chosen:
                    chosen[key] = (b, a, int(et[idx]))


# -- query-dependent reference notions ------------------------------------


def affected_components(h: CoarseHierarchy, vertices: Iterable[int]) -> frozenset:
    out = set()
    for x in vertices:
        out.update(h.ancestors(h.comp_of[x]))
    return frozenset(out)


def is_valid(h: CoarseHierarchy, affected: frozenset, e) -> bool:
    u, v, t = e
    if t != ORIGINAL and (t - 1) in affected:
        return False
    return h.comp_of[u] in affected and h.comp_of[v] in affected


def query_graph(aux: AuxGraph, s: int, t: int, faults: Iterable[int], sparsified: bool = False):
    """(vertex set, valid edge list) of G* for the query."""
    h = aux.h
    F = tuple(faults)
    aff = affected_components(h, (s, t, *F))
    verts = frozenset(v for K in aff for v in h.members[K])
    edges = aux.active_edges() if sparsified else aux.edges
    return verts, [e for e in edges if is_valid(h, aff, e)]


def connected_in(verts, edges, s: int, t: int, faults: Iterable[int]) -> bool:
    gone = set(faults)
    adj: dict[int, list[int]] = {v: [] for v in verts if v not in gone}
    for a, b, _ in edges:
        if a in adj and b in adj:
            adj[a].append(b)
            adj[b].append(a)
    seen = {s}
    queue = deque([s])
    while queue:
        x = queue.popleft()
        if x == t:
            return True
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return False


def _norm(e):
    return (e[0], e[1], e[2]) if e[0] < e[1] else (e[1], e[0], e[2])


def classify_edges(aux: AuxGraph, affected: frozenset, v: int, sparsified: bool = False) -> dict:
    """Edge classes of v: up, down, bad and (for v in G*) the valid set."""
    h = aux.h
    Kv = h.comp_of[v]
    inc = [_norm(e) for e in (aux.active_edges() if sparsified else aux.edges) if v in (e[0], e[1])]
    up, down, bad, star = set(), set(), set(), set()
    for e in inc:
        u = e[1] if e[0] == v else e[0]
        Ku = h.comp_of[u]
        if h.is_ancestor(Ku, Kv):
            up.add(e)
        elif Ku in affected and h.is_ancestor(Kv, Ku):
            down.add(e)
        if e[2] != ORIGINAL and (e[2] - 1) in affected:
            bad.add(e)
        if Kv in affected and is_valid(h, affected, e):
            star.add(e)
    return {"up": up, "down": down, "bad": bad, "star": star}


def edges_to_component(aux: AuxGraph, v: int, K: int, sparsified: bool = False) -> set:
    """Edges at v whose other endpoint lies in component K."""
    h = aux.h
    out = set()
    for e in (aux.active_edges() if sparsified else aux.edges):
        if v in (e[0], e[1]):
            u = e[1] if e[0] == v else e[0]
            if h.comp_of[u] == K:
                out.add(_norm(e))
    return out


def edges_of_type(aux: AuxGraph, v: int, K: int, sparsified: bool = False) -> set:
    cid = aux.h.comp_id(K)
    return {_norm(e) for e in (aux.active_edges() if sparsified else aux.edges)
            if v in (e[0], e[1]) and e[2] == cid}


def cut_direct(aux: AuxGraph, affected: frozenset, U: Iterable[int], sparsified: bool = False) -> set:
    h = aux.h
    U = set(U)
    verts = {v for K in affected for v in h.members[K]}
    out = set()
    for e in (aux.active_edges() if sparsified else aux.edges):
        if not is_valid(h, affected, e):
            continue
        a, b = e[0] in U, e[1] in U
        if a != b and e[0] in verts and e[1] in verts:
            out.add(_norm(e))
    return out


def cut_formula(aux: AuxGraph, affected: frozenset, U: Iterable[int], sparsified: bool = False) -> set:
    """XOR of up-sets over U and, per affected K, of E(v,K) xor E_K(v) over
    v in U that neighbour V(H_K)."""
    h = aux.h
    acc: set = set()
    for v in U:
        acc ^= classify_edges(aux, affected, v, sparsified)["up"]
    for K in sorted(affected):
        nb = set(h.neighbors[K])
        for v in U:
            if v in nb:
                acc ^= edges_to_component(aux, v, K, sparsified) ^ edges_of_type(aux, v, K, sparsified)
    return acc
