"""Undirected simple graphs, edge-list I/O, generators and the brute-force oracle."""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class GraphParseError(ValueError):
    """Raised for malformed edge-list input; carries the 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class InvalidQueryError(ValueError):
    pass


class UnionFind:
    """Disjoint sets over 0..n-1 with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset
    adj: tuple = field(repr=False, compare=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        norm = set()
        nbrs: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            e = (u, v) if u < v else (v, u)
            if e in norm:
                raise ValueError(f"duplicate edge {e}")
            norm.add(e)
            nbrs[u].append(v)
            nbrs[v].append(u)
        adj = tuple(tuple(sorted(a)) for a in nbrs)
        return cls(n, frozenset(norm), adj)

    @property
    def m(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def has_edge(self, u: int, v: int) -> bool:
        return ((u, v) if u < v else (v, u)) in self.edges

    def components(self, removed: Iterable[int] = ()) -> list[int]:
        """Component label per vertex of G - removed (-1 for removed vertices).

        Labels are assigned in order of smallest vertex.
        """
        comp = [-1] * self.n
        gone = set(removed)
        label = 0
        for r in range(self.n):
            if comp[r] != -1 or r in gone:
                continue
            comp[r] = label
            queue = deque([r])
            while queue:
                x = queue.popleft()
                for y in self.adj[x]:
                    if comp[y] == -1 and y not in gone:
                        comp[y] = label
                        queue.append(y)
            label += 1
        return comp

    def to_edge_list(self) -> str:
        lines = [f"{self.n} {self.m}"]
        lines += [f"{u} {v}" for u, v in self.sorted_edges()]
        return "\n".join(lines) + "\n"

    def fingerprint(self) -> int:
        """64-bit digest of the vertex count and sorted edge list."""
        digest = hashlib.blake2b(self.to_edge_list().encode(), digest_size=8).digest()
        return int.from_bytes(digest, "little")


def load_edge_list(text: str) -> Graph:
    """Parse the "n m" header followed by m lines "u v"."""
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln and not ln.startswith(("#", "%"))]
    if not lines:
        raise GraphParseError(1, "empty input, expected header 'n m'")
    lineno, header = lines[0]
    parts = header.split()
    if len(parts) != 2 or not all(p.isdigit() for p in parts):
        raise GraphParseError(lineno, f"expected header 'n m', got {header!r}")
    n, m = int(parts[0]), int(parts[1])
    body = lines[1:]
    if len(body) != m:
        where = body[-1][0] + 1 if body else lineno + 1
        raise GraphParseError(where, f"header announces {m} edges, found {len(body)}")
    seen = set()
    edges = []
    for lineno, ln in body:
        parts = ln.split()
        if len(parts) != 2:
            raise GraphParseError(lineno, f"expected 'u v', got {ln!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphParseError(lineno, f"non-integer vertex id in {ln!r}") from None
        if not (0 <= u < n and 0 <= v < n):
            raise GraphParseError(lineno, f"vertex id out of range [0, {n})")
        if u == v:
            raise GraphParseError(lineno, f"self-loop at {u}")
        e = (min(u, v), max(u, v))
        if e in seen:
            raise GraphParseError(lineno, f"duplicate edge {e}")
        seen.add(e)
        edges.append(e)
    return Graph.from_edges(n, edges)


def generate(model: str, *params, seed: int = 0) -> Graph:
    """Build a graph from a named model.

    gnp(n, p)   Erdos-Renyi, each pair independently with probability p.
    grid(w, h)  w x h lattice, vertex (x, y) has id y*w + x.
    star(k)     K_{1,k} with centre 0.
    cycle(k)    C_k (k = 1 gives one vertex, k = 2 one edge).
    path(k)     P_k.
    complete(k) K_k.
    """
    if model == "gnp":
        n, p = int(params[0]), float(params[1])
        if n < 1:
            raise ValueError("gnp needs n >= 1")
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"gnp probability {p} outside [0, 1]")
        rng = np.random.default_rng(seed)
        iu, ju = np.triu_indices(n, k=1)
        keep = rng.random(iu.size) < p
        return Graph.from_edges(n, zip(iu[keep].tolist(), ju[keep].tolist()))
    if model == "grid":
        w, h = int(params[0]), int(params[1])
        if w < 1 or h < 1:
            raise ValueError("grid needs w, h >= 1")
        edges = []
        for y in range(h):
            for x in range(w):
                v = y * w + x
                if x + 1 < w:
                    edges.append((v, v + 1))
                if y + 1 < h:
                    edges.append((v, v + w))
        return Graph.from_edges(w * h, edges)
    k = int(params[0])
    if k < 1:
        raise ValueError(f"{model} needs k >= 1")
    if model == "star":
        return Graph.from_edges(k + 1, [(0, i) for i in range(1, k + 1)])
    if model == "cycle":
        edges = [(i, i + 1) for i in range(k - 1)]
        if k >= 3:
            edges.append((0, k - 1))
        return Graph.from_edges(k, edges)
    if model == "path":
        return Graph.from_edges(k, [(i, i + 1) for i in range(k - 1)])
    if model == "complete":
        return Graph.from_edges(k, [(i, j) for i in range(k) for j in range(i + 1, k)])
    raise ValueError(f"unknown graph model {model!r}")


def parse_generator_spec(spec: str, seed: int = 0) -> Graph:
    """'gnp:256,0.03' / 'grid:3,3' / 'star:9' style strings."""
    model, _, args = spec.partition(":")
    params = [a for a in args.split(",") if a]
    return generate(model, *params, seed=seed)


def oracle_connected(g: Graph, s: int, t: int, faults: Iterable[int] = ()) -> bool:
    """Exhaustive BFS in G - faults."""
    gone = set(faults)
    if s in gone or t in gone:
        raise InvalidQueryError("query vertex is in the fault set")
    if s == t:
        return True
    seen = {s}
    queue = deque([s])
    while queue:
        x = queue.popleft()
        for y in g.adj[x]:
            if y not in seen and y not in gone:
                if y == t:
                    return True
                seen.add(y)
                queue.append(y)
    return False


def min_spanning_forest(n: int, weighted_edges: Sequence[tuple]) -> list[tuple]:
    """Kruskal over (weight, u, v, tag) tuples; returns the chosen tuples.

    Ties are broken by (min endpoint, max endpoint, tag), so the output is
    fully determined by the input multiset.
    """
    def key(e):
        w, u, v, tag = e
        return (w, min(u, v), max(u, v), tag)

    uf = UnionFind(n)
    out = []
    for e in sorted(weighted_edges, key=key):
        if uf.union(e[1], e[2]):
            out.append(e)
    return out


def petersen() -> Graph:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return Graph.from_edges(10, outer + spokes + inner)
