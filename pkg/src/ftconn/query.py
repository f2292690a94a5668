"""Connectivity queries answered from labels alone.

The engine sees only :class:`FinalLabel` objects (or their byte encodings) of
``s``, ``t`` and the faulty vertices.  It picks a colour avoiding every
fault, splits the affected spanning trees at the faults into initial parts,
assembles each part's sketch from stored pieces, and runs Boruvka rounds on
the sketches until ``s`` and ``t`` share a part or the rounds run out.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import InvalidQueryError, UnionFind
from .labels import FinalLabel, decode_label
from .sketch import Sketch, SketchParams, decode_fields, single_mask, sketch_of_eids


@dataclass
class Part:
    """One initial part: the subtree of ``root`` in its component tree minus
    the subtrees of ``cut`` faults."""

    comp: tuple  # (pre, post) of the component
    root: tuple  # anc of the part root
    cut: list  # anc of each maximal fault below the root

    def contains(self, anc: tuple) -> bool:
        if (anc[0], anc[1]) != self.comp:
            return False
        if not (self.root[2] <= anc[2] and anc[3] <= self.root[3]):
            return False
        return not any(x[2] <= anc[2] and anc[3] <= x[3] for x in self.cut)


@dataclass
class QueryResult:
    connected: bool
    color: int
    parts: int
    rounds: int
    merges: int
    failures: int
    transcript: list = field(default_factory=list)
    live: list = field(default_factory=list)  # live part count entering each round


def select_color(f: int, fault_labels) -> int:
    used = {lab.color for lab in fault_labels}
    for i in range(1, f + 2):
        if i not in used:
            return i
    raise InvalidQueryError("more faults than the label budget allows")


def _is_tree_ancestor(a: tuple, b: tuple) -> bool:
    """a is an ancestor-or-equal of b inside the same component tree."""
    return (a[0], a[1]) == (b[0], b[1]) and a[2] <= b[2] and b[3] <= a[3]


def _validate(ls: FinalLabel, lt: FinalLabel, lf: list) -> None:
    hd = ls.header
    for lab in [lt, *lf]:
        if lab.header != hd:
            raise InvalidQueryError("labels come from different builds")
    ids = [x.vid for x in lf]
    if len(set(ids)) > hd.f:
        raise InvalidQueryError(f"|F|={len(set(ids))} exceeds f={hd.f}")
    if ls.vid in ids or lt.vid in ids:
        raise InvalidQueryError("s and t must not be faulty")


def init_partition(params: SketchParams, color: int, ls: FinalLabel, lt: FinalLabel, lf: list):
    """Initial parts and their dense sketches for the selected colour."""
    i = color - 1
    hs, ht = ls.hier[i], lt.hier[i]
    hf = [x.hier[i] for x in lf]
    fault_anc = [h.anc for h in hf]
    fault_set = set(fault_anc)

    affected: dict[tuple, object] = {}
    for h in [hs, ht, *hf]:
        for cl in h.chain:
            affected.setdefault((cl.anc[0], cl.anc[1]), cl)
    affected_ids = {cl.cid for cl in affected.values()}

    def maximal_cuts(root: tuple) -> list:
        below = [x for x in fault_anc if x != root and _is_tree_ancestor(root, x)]
        return [x for x in below if not any(y != x and _is_tree_ancestor(y, x) for y in below)]

    parts: list[Part] = []
    pieces: list[list[Sketch]] = []
    for key, cl in sorted(affected.items()):
        if cl.anc not in fault_set:
            cuts = maximal_cuts(cl.anc)
            parts.append(Part(key, cl.anc, cuts))
            pieces.append([cl.sketch_up] + [hf[fault_anc.index(x)].sub_sketch for x in cuts])
    for h in hf:
        for child in h.children:
            if child.anc in fault_set:
                continue
            cuts = maximal_cuts(child.anc)
            parts.append(Part((child.anc[0], child.anc[1]), child.anc, cuts))
            pieces.append([child.sketch] + [hf[fault_anc.index(x)].sub_sketch for x in cuts])

    locate_cache: dict[tuple, int | None] = {}

    def locate(anc: tuple):
        if anc not in locate_cache:
            locate_cache[anc] = next((k for k, P in enumerate(parts) if P.contains(anc)), None)
        return locate_cache[anc]

    for cl in affected.values():
        for e in cl.entries:
            k = locate(e.anc)
            if k is not None:
                pieces[k].append(e.sketch)

    # out-edges of faults landing in a part, with a type that is not affected
    extra: list[list[np.ndarray]] = [[] for _ in parts]
    for h in hf:
        if h.out_eids is None or h.out_eids.shape[0] == 0:
            continue
        cols = decode_fields(params, h.out_eids)
        typ = cols[2]
        heads = np.stack(cols[7:11], axis=1)
        for r in range(h.out_eids.shape[0]):
            if int(typ[r]) != 0 and int(typ[r]) in affected_ids:
                continue
            head_anc = tuple(int(x) for x in heads[r])
            if head_anc in fault_set:
                continue
            k = locate(head_anc)
            if k is not None:
                extra[k].append(h.out_eids[r])

    dense = np.zeros((len(parts), params.cells, params.W), np.uint64)
    for k in range(len(parts)):
        for sk in pieces[k]:
            sk.xor_into(dense[k])
        if extra[k]:
            sketch_of_eids(params, np.stack(extra[k])).xor_into(dense[k])
    return parts, dense, locate


def _first_singles(params: SketchParams, blocks: np.ndarray, fault_ids: np.ndarray):
    """Per block, the fields of the first cell isolating one edge that avoids
    the faults, or None."""
    k, rc, W = blocks.shape
    flat = blocks.reshape(k * rc, W)
    nz = np.flatnonzero(flat.any(axis=1))
    out = [None] * k
    if nz.size == 0:
        return out
    rows = flat[nz]
    ok = single_mask(params, rows)
    cols = decode_fields(params, rows)
    if fault_ids.size:
        ok &= ~np.isin(cols[0], fault_ids) & ~np.isin(cols[1], fault_ids)
    hit = nz[ok]
    cols = [c[ok] for c in cols]
    owner = hit // rc
    seen = set()
    for j, b in enumerate(owner.tolist()):
        if b not in seen:
            seen.add(b)
            out[b] = [int(c[j]) for c in cols]
    return out


def answer_labels(ls: FinalLabel, lt: FinalLabel, lf=(), transcript: bool = False) -> QueryResult:
    lf = list({x.vid: x for x in lf}.values())
    _validate(ls, lt, lf)
    hd = ls.header
    color = select_color(hd.f, lf)
    if ls.gcomp != lt.gcomp:
        return QueryResult(False, color, 0, 0, 0, 0)
    if ls.vid == lt.vid:
        return QueryResult(True, color, 0, 0, 0, 0)
    lf = [x for x in lf if x.gcomp == ls.gcomp]
    if not lf:
        return QueryResult(True, color, 0, 0, 0, 0)

    params = hd.params()
    parts, dense, locate = init_partition(params, color, ls, lt, lf)
    i = color - 1
    ps, pt = locate(ls.hier[i].anc), locate(lt.hier[i].anc)
    if ps is None or pt is None:
        raise InvalidQueryError("query vertex lies in no part; labels are inconsistent")
    uf = UnionFind(len(parts))
    fault_ids = np.array([x.vid for x in lf], np.uint64)
    rc = params.round_cells
    log: list[str] = []
    history: list[int] = []
    merges = failures = rounds = 0
    for q in range(params.p):
        if uf.find(ps) == uf.find(pt):
            break
        rounds += 1
        live = sorted({uf.find(k) for k in range(len(parts))})
        history.append(len(live))
        blocks = dense[live][:, q * rc : (q + 1) * rc]
        found = _first_singles(params, blocks, fault_ids)
        joins = []
        for P, e in zip(live, found):
            if e is None:
                failures += 1
                continue
            a = locate(tuple(e[3:7]))
            b = locate(tuple(e[7:11]))
            ra = uf.find(a) if a is not None else None
            rb = uf.find(b) if b is not None else None
            if ra is None or rb is None or ra == rb or P not in (ra, rb):
                failures += 1
                continue
            joins.append((ra, rb, e))
        for ra, rb, e in joins:
            x, y = uf.find(ra), uf.find(rb)
            if x == y:
                continue
            uf.union(x, y)
            root = uf.find(x)
            other = y if root == x else x
            dense[root] ^= dense[other]
            merges += 1
            if transcript:
                log.append(f"round {q + 1}: merge {x} {y} via {e[0]}->{e[1]} type {e[2]}")
    return QueryResult(uf.find(ps) == uf.find(pt), color, len(parts), rounds, merges, failures, log, history)


def answer(ls: FinalLabel, lt: FinalLabel, lf=()) -> bool:
    return answer_labels(ls, lt, lf).connected


def answer_bytes(s_buf, t_buf, fault_bufs=()) -> bool:
    """Answer from encoded labels; each buffer is ``bytes`` or ``(bytes, nbits)``."""

    def dec(x):
        return decode_label(*x) if isinstance(x, tuple) else decode_label(x)

    return answer(dec(s_buf), dec(t_buf), [dec(x) for x in fault_bufs])
