"""Low-degree Steiner forest decomposition (T, B) for a terminal set.

The output contract (checked by :func:`check_decomp`):

1. T is a Steiner forest for the terminals, and T - B has no (G - B)-path
   between two of its distinct trees.
2. Every vertex of T - B has degree at most ``s`` in T - B.
3. ``|B| < |U|/(s-2)`` and ``|B & U| < |U|/(s-1)``.

Construction is a Fuerer-Raghavachari style local search.  The search only
lowers degrees of vertices above ``s``; vertices of degree exactly ``s`` act
as blockers that may be released when a connector path runs through them.
Once no connector joins two good classes the blocked set is a valid ``B``.
Because every leaf of T is a terminal and every B-vertex has T-degree at
least ``s``, the size bounds of (3) follow from leaf counting.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable

from .graph import Graph, UnionFind


class DecompError(RuntimeError):
    """The (T, B) pair failed its contract; indicates an implementation bug."""


@dataclass(frozen=True)
class DecompResult:
    terminals: frozenset
    tree_vertices: frozenset
    tree_edges: frozenset  # (u, v) with u < v
    bad: frozenset

    def adjacency(self) -> dict[int, set[int]]:
        adj = {v: set() for v in self.tree_vertices}
        for u, v in self.tree_edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj


def decomp(g: Graph, terminals: Iterable[int], s: int = 4, check: bool = True) -> DecompResult:
    if s < 3:
        raise ValueError("degree threshold s must be at least 3")
    U = frozenset(terminals)
    T = _initial_forest(g, U)
    phi = _excess(T, s)
    max_phases = 4 * g.n + 64
    for _ in range(max_phases):
        witness = _phase(g, T, U, s)
        _prune(T, U)
        if witness is not None:
            break
        new_phi = _excess(T, s)
        if new_phi >= phi:
            # degrees above s must strictly drop per improvement
            raise DecompError("local search made no progress")
        phi = new_phi
    else:
        raise DecompError("local search did not converge")
    bad = _minimize_blockers(g, T, witness, s)
    edges = frozenset((a, b) for a in T for b in T[a] if a < b)
    res = DecompResult(U, frozenset(T), edges, frozenset(bad))
    if check:
        problems = check_decomp(g, res, s)
        if problems:
            raise DecompError("; ".join(problems))
    return res


def check_decomp(g: Graph, res: DecompResult, s: int) -> list[str]:
    """Return the list of violated contract clauses (empty when all hold)."""
    problems = []
    U, B = res.terminals, res.bad
    adj = res.adjacency()
    verts = res.tree_vertices
    for u, v in res.tree_edges:
        if not g.has_edge(u, v):
            problems.append(f"tree edge ({u},{v}) not in G")
    if not U <= verts:
        problems.append("some terminal missing from T")
    uf = UnionFind(g.n)
    for u, v in res.tree_edges:
        if not uf.union(u, v):
            problems.append("T contains a cycle")
            break
    gcomp = g.components()
    # one tree per G-component holding terminals, every tree holds a terminal
    tree_of_comp: dict[int, int] = {}
    trees_with_terminal = set()
    for u in U:
        r = uf.find(u)
        trees_with_terminal.add(r)
        prev = tree_of_comp.setdefault(gcomp[u], r)
        if prev != r:
            problems.append(f"terminals of G-component {gcomp[u]} split across trees")
    for v in verts:
        if uf.find(v) not in trees_with_terminal:
            problems.append(f"tree through {v} carries no terminal")
            break
    # degree bound in T - B
    for v in verts - B:
        d = sum(1 for w in adj[v] if w not in B)
        if d > s:
            problems.append(f"vertex {v} has degree {d} > {s} in T - B")
    if U:
        if not len(B) < len(U) / (s - 2):
            problems.append(f"|B|={len(B)} not < |U|/(s-2)={len(U) / (s - 2):.3f}")
        if not len(B & U) < len(U) / (s - 1):
            problems.append(f"|B&U|={len(B & U)} not < |U|/(s-1)={len(U) / (s - 1):.3f}")
    if not _separated(g, adj, B):
        problems.append("a (G-B)-path joins distinct trees of T-B")
    return problems


# -- construction ---------------------------------------------------------


def _initial_forest(g: Graph, U: frozenset) -> dict[int, set[int]]:
    """DFS trees (path-like, hence low degree) pruned down to the terminals."""
    T: dict[int, set[int]] = {}
    seen = [False] * g.n
    for r in sorted(U):
        if seen[r]:
            continue
        seen[r] = True
        T[r] = set()
        stack = [(r, iter(g.adj[r]))]
        while stack:
            v, it = stack[-1]
            for w in it:
                if not seen[w]:
                    seen[w] = True
                    T[w] = {v}
                    T[v].add(w)
                    stack.append((w, iter(g.adj[w])))
                    break
            else:
                stack.pop()
    _prune(T, U)
    return T


def _prune(T: dict[int, set[int]], U: frozenset) -> None:
    queue = deque(v for v in T if len(T[v]) <= 1 and v not in U)
    while queue:
        v = queue.popleft()
        if v not in T or v in U or len(T[v]) > 1:
            continue
        for w in T.pop(v):
            T[w].discard(v)
            if len(T[w]) <= 1 and w not in U:
                queue.append(w)


def _excess(T: dict[int, set[int]], s: int) -> int:
    return sum(max(0, len(nb) - s) for nb in T.values())


def _tree_path(T: dict[int, set[int]], x: int, y: int) -> list[int]:
    parent = {x: None}
    queue = deque([x])
    while queue:
        a = queue.popleft()
        if a == y:
            break
        for b in T[a]:
            if b not in parent:
                parent[b] = a
                queue.append(b)
    if y not in parent:
        raise DecompError(f"{x} and {y} are not in the same tree")
    path = [y]
    while path[-1] != x:
        path.append(parent[path[-1]])
    return path[::-1]


def _phase(g: Graph, T: dict[int, set[int]], U: frozenset, s: int):
    """Either apply one improvement (returns None) or return a blocking set."""
    deg = {v: len(nb) for v, nb in T.items()}
    if not deg or max(deg.values()) <= s:
        return set()
    W = {v for v, d in deg.items() if d >= s}
    uf = UnionFind(g.n)
    for a in T:
        if a not in W:
            for b in T[a]:
                if b not in W:
                    uf.union(a, b)
    zcomps = _outside_components(g, T)
    rec: dict[int, tuple] = {}
    edges = g.sorted_edges()

    def good(v):
        return v in T and v not in W

    progress = True
    while progress:
        progress = False
        connectors = []
        for a, b in edges:
            if good(a) and good(b) and uf.find(a) != uf.find(b):
                connectors.append((a, b, (a, b)))
        for comp in zcomps:
            attach = [(t, z) for z in comp for t in g.adj[z] if good(t)]
            by_class: dict[int, tuple] = {}
            for t, z in sorted(attach):
                by_class.setdefault(uf.find(t), (t, z))
            if len(by_class) >= 2:
                (t1, z1), (t2, z2) = sorted(by_class.values())[:2]
                inner = _path_within(g, set(comp), z1, z2)
                connectors.append((t1, t2, (t1, *inner, t2)))
        for x, y, path in connectors:
            if uf.find(x) == uf.find(y):
                continue
            pi = _tree_path(T, x, y)
            blocked = [w for w in pi if w in W]
            high = [w for w in blocked if deg[w] > s]
            if high:
                _apply(T, (x, y, path), high[0], rec, s, set())
                return None
            for u in blocked:
                W.discard(u)
                rec[u] = (x, y, path)
                for nb in T[u]:
                    if nb not in W:
                        uf.union(u, nb)
            progress = True
    return W


def _apply(T, conn, target, rec, s, reduced) -> None:
    """Add the connector path and drop one tree edge of ``target`` on its cycle."""
    x, y, path = conn
    for z in (x, y):
        if z in T and len(T[z]) >= s and z in rec and z not in reduced:
            reduced.add(z)
            _apply(T, rec[z], z, rec, s, reduced)
    on_tree = [i for i, v in enumerate(path) if v in T]
    for a, b in zip(on_tree, on_tree[1:]):
        pi = _tree_path(T, path[a], path[b])
        if target in pi[1:-1]:
            seg = path[a : b + 1]
            break
    else:
        raise DecompError(f"vertex {target} is not on the cycle of its connector")
    k = pi.index(target)
    drop = pi[k - 1]
    for u, v in zip(seg, seg[1:]):
        T.setdefault(u, set()).add(v)
        T.setdefault(v, set()).add(u)
    T[target].discard(drop)
    T[drop].discard(target)


def _outside_components(g: Graph, T) -> list[list[int]]:
    seen = set(T)
    comps = []
    for r in range(g.n):
        if r in seen:
            continue
        seen.add(r)
        comp = [r]
        queue = deque([r])
        while queue:
            a = queue.popleft()
            for b in g.adj[a]:
                if b not in seen:
                    seen.add(b)
                    comp.append(b)
                    queue.append(b)
        comps.append(sorted(comp))
    return comps


def _path_within(g: Graph, allowed: set[int], a: int, b: int) -> list[int]:
    parent = {a: None}
    queue = deque([a])
    while queue:
        x = queue.popleft()
        if x == b:
            break
        for y in g.adj[x]:
            if y in allowed and y not in parent:
                parent[y] = x
                queue.append(y)
    path = [b]
    while path[-1] != a:
        path.append(parent[path[-1]])
    return path[::-1]


def _separated(g: Graph, T: dict[int, set[int]], B) -> bool:
    """No (G - B)-path joins two distinct trees of T - B."""
    uf = UnionFind(g.n)
    for a in T:
        if a not in B:
            for b in T[a]:
                if b not in B:
                    uf.union(a, b)
    gcomp = g.components(B)
    cls: dict[int, int] = {}
    for v in T:
        if v in B:
            continue
        r = uf.find(v)
        if cls.setdefault(gcomp[v], r) != r:
            return False
    return True


def _minimize_blockers(g: Graph, T, W: set[int], s: int) -> set[int]:
    B = set(W)
    for u in sorted(W):
        if len(T.get(u, ())) > s or u not in T:
            continue
        trial = B - {u}
        if _separated(g, T, trial):
            B = trial
    # pruning after the last phase can only lower degrees
    return {v for v in B if v in T}
