"""Base hierarchy H0, colour partitions and the coarsened per-colour hierarchies.

H0 is built by iterating :func:`decomp` with terminal sets ``B_0 = V``,
``B_{i} = bad(Decomp(G, B_{i-1}, 4))`` until the bad set is empty.  Components
(gamma) at level i are the pieces of ``B_i`` that survive all later bad sets,
split by connectivity once those later sets are removed.

A coarse hierarchy H(S) merges connected subtrees of H0 so that every vertex
outside S ends up with low degree in the spanning tree of its component.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .decomp import DecompResult, decomp
from .graph import Graph, UnionFind


class HierarchyError(RuntimeError):
    """Internal consistency failure while building a hierarchy."""


# -- base hierarchy -------------------------------------------------------


@dataclass
class BaseHierarchy:
    n: int
    s: int
    b_sets: list  # B_0 = V, B_1, ..., B_L = empty
    decomps: list  # decomps[i] = (T_{i+1}, B_{i+1})
    members: list  # gamma -> sorted tuple of vertices
    level: list
    parent: list  # -1 for roots
    children: list
    comp_of: list  # vertex -> gamma
    steiner_edges: list  # gamma -> frozenset of T0(gamma) edges
    t_union: frozenset
    subtree: list  # gamma -> frozenset V(H0_gamma)
    neighbors: list  # gamma -> tuple N(H0_gamma), sorted
    pre: list = field(default_factory=list)
    post: list = field(default_factory=list)

    @property
    def L(self) -> int:
        return len(self.decomps)

    def __len__(self):
        return len(self.members)

    def is_ancestor(self, a: int, b: int) -> bool:
        """a is an ancestor of b (or equal)."""
        return self.pre[a] <= self.pre[b] and self.post[b] <= self.post[a]

    def postorder(self) -> list[int]:
        return sorted(range(len(self)), key=lambda c: self.post[c])

    def t_union_degrees(self) -> list[int]:
        deg = [0] * self.n
        for u, v in self.t_union:
            deg[u] += 1
            deg[v] += 1
        return deg


def build_base_hierarchy(g: Graph, s: int = 4) -> BaseHierarchy:
    n = g.n
    b_sets = [frozenset(range(n))]
    decomps: list[DecompResult] = []
    while b_sets[-1]:
        res = decomp(g, b_sets[-1], s)
        decomps.append(res)
        b_sets.append(res.bad)
        if len(decomps) > n + 1:
            raise HierarchyError("bad sets failed to shrink")
    L = len(decomps)

    # later[i] = B_{i+1} | ... | B_{L-1}
    later = [frozenset()] * L
    acc: frozenset = frozenset()
    for i in range(L - 1, -1, -1):
        later[i] = acc
        acc = acc | b_sets[i]

    raw = []  # (level, members)
    key_of: dict[tuple[int, int], int] = {}
    labels = []
    for i in range(L):
        lab = g.components(later[i])
        labels.append(lab)
        groups: dict[int, list[int]] = {}
        for v in sorted(b_sets[i] - later[i]):
            groups.setdefault(lab[v], []).append(v)
        for members in groups.values():
            raw.append((i, tuple(members)))
    # deterministic ids: higher levels first, then smallest member
    raw.sort(key=lambda t: (-t[0], t[1][0]))
    members = [m for _, m in raw]
    level = [lv for lv, _ in raw]
    comp_of = [-1] * n
    for c, m in enumerate(members):
        for v in m:
            comp_of[v] = c
        key_of[(level[c], labels[level[c]][m[0]])] = c
    if any(c < 0 for c in comp_of):
        raise HierarchyError("components do not cover V")

    parent = [-1] * len(members)
    for c, m in enumerate(members):
        for j in range(level[c] + 1, L):
            p = key_of.get((j, labels[j][m[0]]))
            if p is not None:
                parent[c] = p
                break
    children: list[list[int]] = [[] for _ in members]
    for c, p in enumerate(parent):
        if p >= 0:
            children[p].append(c)

    steiner = [_spanning_subtree(decomps[level[c]], set(m)) for c, m in enumerate(members)]
    t_union = frozenset(
        e for res in decomps for e in res.tree_edges if e[0] not in res.bad and e[1] not in res.bad
    )

    h = BaseHierarchy(
        n=n, s=s, b_sets=b_sets, decomps=decomps, members=members, level=level,
        parent=parent, children=children, comp_of=comp_of, steiner_edges=steiner,
        t_union=t_union, subtree=[], neighbors=[],
    )
    h.pre, h.post = _interval_stamps(parent, children)
    h.subtree = _subtree_sets(h.members, children, h.postorder())
    h.neighbors = [_outside_neighbors(g, sub) for sub in h.subtree]
    return h


def _spanning_subtree(res: DecompResult, targets: set[int]) -> frozenset:
    """Minimal subtree of T - B spanning ``targets`` (all in one tree)."""
    adj = {v: set() for v in res.tree_vertices if v not in res.bad}
    for u, v in res.tree_edges:
        if u in adj and v in adj:
            adj[u].add(v)
            adj[v].add(u)
    start = min(targets)
    seen = {start}
    queue = deque([start])
    while queue:
        a = queue.popleft()
        for b in adj[a]:
            if b not in seen:
                seen.add(b)
                queue.append(b)
    if not targets <= seen:
        raise HierarchyError("component not contained in one tree of T - B")
    sub = {v: adj[v] & seen for v in seen}
    leaves = deque(v for v in sub if len(sub[v]) <= 1 and v not in targets)
    while leaves:
        v = leaves.popleft()
        if v not in sub or v in targets or len(sub[v]) > 1:
            continue
        for w in sub.pop(v):
            sub[w].discard(v)
            if len(sub[w]) <= 1 and w not in targets:
                leaves.append(w)
    return frozenset((a, b) for a in sub for b in sub[a] if a < b)


def _interval_stamps(parent, children) -> tuple[list[int], list[int]]:
    """DFS pre/post stamps in [1, 2N] over a forest; children visited by id."""
    k = len(parent)
    pre, post = [0] * k, [0] * k
    clock = 0
    for r in range(k):
        if parent[r] != -1:
            continue
        clock += 1
        pre[r] = clock
        stack = [(r, iter(sorted(children[r])))]
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                clock += 1
                post[node] = clock
                stack.pop()
            else:
                clock += 1
                pre[nxt] = clock
                stack.append((nxt, iter(sorted(children[nxt]))))
    return pre, post


def _subtree_sets(members, children, order) -> list[frozenset]:
    out: list = [None] * len(members)
    for c in order:
        acc = set(members[c])
        for ch in children[c]:
            acc |= out[ch]
        out[c] = frozenset(acc)
    return out


def _outside_neighbors(g: Graph, inside: frozenset) -> tuple:
    return tuple(sorted({w for v in inside for w in g.adj[v] if w not in inside}))


def dump_base(h: BaseHierarchy) -> str:
    """Indented text view: one line per component, children nested."""
    lines = []

    def walk(c, depth):
        edges = " ".join(f"{u}-{v}" for u, v in sorted(h.steiner_edges[c]))
        lines.append(f"{'  ' * depth}[{c}] level={h.level[c]} members={list(h.members[c])} tree={edges}")
        for ch in sorted(h.children[c], key=lambda x: h.pre[x]):
            walk(ch, depth + 1)

    for r in sorted((c for c in range(len(h)) if h.parent[c] == -1), key=lambda x: h.pre[x]):
        walk(r, 0)
    return "\n".join(lines) + "\n"


# -- colour partitions ----------------------------------------------------


@dataclass(frozen=True)
class ColorPartition:
    f: int
    colors: tuple  # colors[v] in 1..f+1

    def part(self, i: int) -> frozenset:
        return frozenset(v for v, c in enumerate(self.colors) if c == i)

    def avoiding(self, faults) -> int:
        """Smallest colour absent from ``faults``."""
        used = {self.colors[x] for x in faults}
        for i in range(1, self.f + 2):
            if i not in used:
                return i
        raise HierarchyError("more than f faults")


def random_partition(n: int, f: int, seed: int) -> ColorPartition:
    if f < 1:
        raise ValueError("f must be at least 1")
    rng = np.random.default_rng(seed)
    return ColorPartition(f, tuple(int(c) for c in rng.integers(1, f + 2, size=n)))


@lru_cache(maxsize=None)
def _psi(x: int, y: int, f: int) -> float:
    total = 0.0
    for k in range(1, y + 1):
        total += (-1) ** (k + 1) * math.comb(y, k) * (1 - k / (f + 1)) ** x
    return total


def psi(x: int, y: int, f: int) -> float:
    """Probability that one of ``y`` missing colours stays missing after
    ``x`` more uniform draws from f+1 colours."""
    if x < 0 or not 0 <= y <= f + 1:
        raise ValueError("psi needs x >= 0 and 0 <= y <= f+1")
    return min(1.0, max(0.0, _psi(x, y, f)))


def hitting_threshold(n: int, f: int) -> float:
    return max(3 * (f + 1) * math.log(n), 1.0) if n > 1 else 1.0


def derandomized_partition(h0: BaseHierarchy, f: int) -> ColorPartition:
    """Conditional-expectations colouring hitting every large N(H0_gamma)."""
    if f < 1:
        raise ValueError("f must be at least 1")
    n, k = h0.n, f + 1
    thr = hitting_threshold(n, f)
    cap = math.ceil(thr)
    watched = [tuple(nb[:cap]) for nb in h0.neighbors if len(nb) >= thr]
    remaining = [len(w) for w in watched]
    present = [set() for _ in watched]
    touching: list[list[int]] = [[] for _ in range(n)]
    for idx, w in enumerate(watched):
        for v in w:
            touching[v].append(idx)
    colors = [0] * n
    used = [0] * (k + 1)
    for v in range(n):
        best = None
        for c in range(1, k + 1):
            delta = 0.0
            for idx in touching[v]:
                x, y = remaining[idx], k - len(present[idx])
                y_new = y - (0 if c in present[idx] else 1)
                delta += psi(x - 1, y_new, f) - psi(x, y, f)
            key = (delta, used[c], c)
            if best is None or key < best:
                best = key
        c = best[2]
        colors[v] = c
        used[c] += 1
        for idx in touching[v]:
            remaining[idx] -= 1
            present[idx].add(c)
    part = ColorPartition(f, tuple(colors))
    for idx, w in enumerate(watched):
        if len(present[idx]) != k:
            raise HierarchyError(f"colour hitting failed for a watched set of size {len(w)}")
    return part


def hitting_violations(h0: BaseHierarchy, part: ColorPartition) -> list[int]:
    """gamma ids whose large neighbour set misses some colour."""
    thr = hitting_threshold(h0.n, part.f)
    bad = []
    for c, nb in enumerate(h0.neighbors):
        if len(nb) >= thr and len({part.colors[v] for v in nb}) != part.f + 1:
            bad.append(c)
    return bad


# -- coarse hierarchy -----------------------------------------------------


@dataclass
class CoarseHierarchy:
    n: int
    color: int
    S: frozenset
    members: list  # K -> sorted tuple
    parent: list
    children: list
    comp_of: list  # vertex -> K
    root: list  # K -> r_K
    tree_parent: list  # vertex -> parent in T(K_v), -1 at r_K
    tree_children: list  # vertex -> sorted children
    subtree: list  # K -> frozenset V(H_K)
    neighbors: list  # K -> tuple N(H_K)
    depth: list  # K -> depth in H (roots 0)
    tops: list  # K -> top gamma of H0
    pre: list = field(default_factory=list)
    post: list = field(default_factory=list)
    vpre: list = field(default_factory=list)  # vertex stamps in T(K_v)
    vpost: list = field(default_factory=list)
    unify_edges: list = field(default_factory=list)  # K -> edges added by unification

    def __len__(self):
        return len(self.members)

    def comp_id(self, K: int) -> int:
        return K + 1

    def is_ancestor(self, a: int, b: int) -> bool:
        return self.pre[a] <= self.pre[b] and self.post[b] <= self.post[a]

    def ancestors(self, K: int) -> list[int]:
        """K and its strict ancestors, bottom-up."""
        out = []
        while K != -1:
            out.append(K)
            K = self.parent[K]
        return out

    def anc(self, v: int) -> tuple[int, int, int, int]:
        K = self.comp_of[v]
        return (self.pre[K], self.post[K], self.vpre[v], self.vpost[v])

    def tree_edges(self, K: int) -> list[tuple[int, int]]:
        return sorted((min(v, self.tree_parent[v]), max(v, self.tree_parent[v]))
                      for v in self.members[K] if self.tree_parent[v] != -1)

    def tree_degree(self, v: int) -> int:
        return len(self.tree_children[v]) + (self.tree_parent[v] != -1)

    def subtree_of_vertex(self, v: int) -> list[int]:
        out, stack = [], [v]
        while stack:
            x = stack.pop()
            out.append(x)
            stack.extend(self.tree_children[x])
        return out


def coarsen(g: Graph, h0: BaseHierarchy, part: ColorPartition, color: int,
            order: list[int] | None = None) -> CoarseHierarchy:
    """Unify connected subtrees of H0 for the colour class ``S = S_color``.

    ``order`` overrides the postorder of H0 (any postorder is admissible).
    """
    S = part.part(color)
    k = len(h0)
    uf = UnionFind(k)
    top = list(range(k))  # per UF root
    edges_of: dict[int, set] = {c: set(h0.steiner_edges[c]) for c in range(k)}
    extra_of: dict[int, set] = {c: set() for c in range(k)}
    t_union_adj: list[list[int]] = [[] for _ in range(g.n)]
    for u, v in h0.t_union:
        t_union_adj[u].append(v)
        t_union_adj[v].append(u)

    def K(c):
        return uf.find(c)

    def strict_desc_comp(gamma: int, b: int) -> bool:
        cb = h0.comp_of[b]
        return cb != gamma and h0.is_ancestor(gamma, cb) and K(cb) != K(gamma)

    def child_toward(k0: int, target: int) -> int:
        """Current child of component k0 that is an ancestor of component target."""
        c = top[target]
        while K(h0.parent[c]) != k0:
            c = top[K(h0.parent[c])]
        return K(c)

    def smallest_edge_into(k0: int, child: int) -> tuple[int, int]:
        t = top[child]
        best = None
        for a in _members_of(k0):
            for b in g.adj[a]:
                if h0.is_ancestor(t, h0.comp_of[b]):
                    e = (a, b) if a < b else (b, a)
                    if best is None or e < best:
                        best = (e, b)
        if best is None:
            raise HierarchyError("no edge from a parent into a child subtree")
        return best

    member_cache: dict[int, list[int]] = {}

    def _members_of(kk: int) -> list[int]:
        if kk not in member_cache:
            member_cache[kk] = [v for c in range(k) if K(c) == kk for v in h0.members[c]]
        return member_cache[kk]

    def unify(k0: int, targets: list[int]) -> list[tuple[int, int]]:
        targets = [t for t in targets if t != k0]
        if not targets:
            return []
        groups: dict[int, list[int]] = {}
        for t in targets:
            groups.setdefault(child_toward(k0, t), []).append(t)
        out = []
        for ch in sorted(groups, key=lambda x: h0.pre[top[x]]):
            e_i, b = smallest_edge_into(k0, ch)
            k_i = K(h0.comp_of[b])
            out.extend(unify(ch, groups[ch] + [k_i]))
            out.append(e_i)
        return out

    for gamma in (order if order is not None else h0.postorder()):
        in_s = [a for a in h0.members[gamma] if a in S]
        while True:
            cands = []
            for a in h0.members[gamma]:
                for b in t_union_adj[a]:
                    if strict_desc_comp(gamma, b):
                        cands.append((min(a, b), max(a, b), b))
            for a in in_s:
                for b in g.adj[a]:
                    if strict_desc_comp(gamma, b):
                        cands.append((min(a, b), max(a, b), b))
            if not cands:
                break
            lo, hi, b = min(cands)
            kg = K(gamma)
            k1 = K(h0.comp_of[b])
            k0 = child_toward(kg, k1)
            found = unify(k0, [k1]) + [(lo, hi)]
            touched = {kg}
            for u, v in found:
                touched.add(K(h0.comp_of[u]))
                touched.add(K(h0.comp_of[v]))
            new_edges = set(found)
            new_extra = set(found)
            for t in touched:
                new_edges |= edges_of.pop(t)
                new_extra |= extra_of.pop(t)
            keep_top = top[kg]
            for t in touched:
                uf.union(kg, t)
            r = K(gamma)
            top[r] = keep_top
            edges_of[r] = new_edges
            extra_of[r] = new_extra
            member_cache.clear()

    return _finalize(g, h0, uf, top, edges_of, extra_of, S, color)


def _finalize(g, h0, uf, top, edges_of, extra_of, S, color) -> CoarseHierarchy:
    k = len(h0)
    roots = sorted({uf.find(c) for c in range(k)}, key=lambda r: h0.pre[top[r]])
    groups: dict[int, list[int]] = {r: [] for r in roots}
    for c in range(k):
        groups[uf.find(c)].append(c)
    # order components by preorder of their top gamma so ids are a DFS order
    index = {r: i for i, r in enumerate(roots)}
    members = [tuple(sorted(v for c in groups[r] for v in h0.members[c])) for r in roots]
    tops = [top[r] for r in roots]
    parent = [index[uf.find(h0.parent[t])] if h0.parent[t] != -1 else -1 for t in tops]
    children: list[list[int]] = [[] for _ in roots]
    for K, p in enumerate(parent):
        if p >= 0:
            children[p].append(K)
    comp_of = [-1] * g.n
    for K, m in enumerate(members):
        for v in m:
            comp_of[v] = K

    tree_parent = [-1] * g.n
    tree_children: list[list[int]] = [[] for _ in range(g.n)]
    root = []
    for K, r in enumerate(roots):
        inside = set(members[K])
        adj: dict[int, list[int]] = {v: [] for v in inside}
        for u, v in edges_of[r]:
            if u not in inside or v not in inside:
                raise HierarchyError(f"Steiner vertex left in the tree of component {K + 1}")
            adj[u].append(v)
            adj[v].append(u)
        rk = members[K][0]
        root.append(rk)
        seen = {rk}
        queue = deque([rk])
        while queue:
            a = queue.popleft()
            for b in sorted(adj[a]):
                if b not in seen:
                    seen.add(b)
                    tree_parent[b] = a
                    tree_children[a].append(b)
                    queue.append(b)
        if len(seen) != len(inside):
            raise HierarchyError(f"tree of component {K + 1} does not span it")

    subtree = [frozenset(h0.subtree[t]) for t in tops]
    neighbors = [_outside_neighbors(g, sub) for sub in subtree]
    depth = [0] * len(roots)
    for K in range(len(roots)):  # parents precede children in preorder ids
        if parent[K] >= 0:
            depth[K] = depth[parent[K]] + 1
    ch = CoarseHierarchy(
        n=g.n, color=color, S=S, members=members, parent=parent, children=children,
        comp_of=comp_of, root=root, tree_parent=tree_parent, tree_children=tree_children,
        subtree=subtree, neighbors=neighbors, depth=depth, tops=tops,
        unify_edges=[sorted(extra_of[r]) for r in roots],
    )
    ch.pre, ch.post = _interval_stamps(parent, children)
    ch.vpre, ch.vpost = [0] * g.n, [0] * g.n
    for K in range(len(roots)):
        _vertex_stamps(ch, root[K])
    return ch


def _vertex_stamps(ch: CoarseHierarchy, r: int) -> None:
    clock = 1
    ch.vpre[r] = clock
    stack = [(r, iter(ch.tree_children[r]))]
    while stack:
        node, it = stack[-1]
        nxt = next(it, None)
        clock += 1
        if nxt is None:
            ch.vpost[node] = clock
            stack.pop()
        else:
            ch.vpre[nxt] = clock
            stack.append((nxt, iter(ch.tree_children[nxt])))


def dump_coarse(h: CoarseHierarchy) -> str:
    lines = []

    def walk(K, depth):
        edges = " ".join(f"{u}-{v}" for u, v in h.tree_edges(K))
        lines.append(f"{'  ' * depth}K{K + 1} root={h.root[K]} members={list(h.members[K])} tree={edges}")
        for c in h.children[K]:
            walk(c, depth + 1)

    for K in range(len(h)):
        if h.parent[K] == -1:
            walk(K, 0)
    return "\n".join(lines) + "\n"
