"""Experiment plumbing shared by the CLI and the acceptance tests: graph
loading, query sampling, oracle benchmarks, hierarchy statistics and the
property-suite runner behind ``verify``."""

from __future__ import annotations

import math
import random
import time
from dataclasses import asdict, dataclass

import numpy as np

from .auxgraph import affected_components, build_aux_graph, query_graph
from .decomp import check_decomp
from .graph import Graph, UnionFind, load_edge_list, oracle_connected, parse_generator_spec
from .hierarchy import hitting_violations
from .labels import BuildArtifacts, FinalLabel, build_labels, decode_label, encode_label, label_stats
from .query import answer_labels, init_partition, select_color
from .sketch import from_dense, merge, sketch_of, sketch_of_eids, sketch_of_single
from .verify import check_base, check_coarse


@dataclass
class ExperimentConfig:
    graph: str
    f: int = 1
    seed: int = 0
    c: float = 8.0
    c_sparse: float = 4.0
    uid_bits: int = 64
    queries: int = 0
    partition: str = "derandomized"
    out: str | None = None

    def validate(self) -> None:
        if self.f < 1:
            raise ValueError("f must be at least 1")
        if self.c <= 0 or self.c_sparse <= 0:
            raise ValueError("c and c_sparse must be positive")
        if not 1 <= self.uid_bits <= 64:
            raise ValueError("uid width must be in [1, 64]")
        if self.queries < 0:
            raise ValueError("query count must be non-negative")
        if self.partition not in ("derandomized", "random"):
            raise ValueError(f"unknown partition mode {self.partition!r}")


def load_graph(source: str, seed: int = 0) -> Graph:
    """``gen:<model>:<params>`` for a generator, otherwise an edge-list path."""
    if source.startswith("gen:"):
        return parse_generator_spec(source[4:], seed)
    with open(source) as fh:
        return load_edge_list(fh.read())


# -- statistics -----------------------------------------------------------


def hierarchy_stats(art: BuildArtifacts) -> dict:
    g, h0 = art.g, art.h0
    logn = math.log2(g.n) if g.n > 1 else 0.0
    per_color = []
    for h, aux in zip(art.hierarchies, art.aux):
        non_s = [h.tree_degree(v) for v in range(g.n) if v not in h.S]
        per_color.append({
            "color": h.color,
            "components": len(h),
            "depth": max(h.depth, default=0) + 1,
            "max_tree_degree_non_s": max(non_s, default=0),
            "max_neighbor_set": max((len(nb) for nb in h.neighbors), default=0),
            "aux_edges": len(aux.edges),
            "sparsified_edges": len(aux.oriented or []),
            "sparsify_rounds": aux.rounds,
            "max_outdegree": aux.max_outdegree(),
        })
    return {
        "n": g.n,
        "m": g.m,
        "L": h0.L,
        "log2n": logn,
        "base_components": len(h0),
        "max_t_union_degree": max(h0.t_union_degrees(), default=0),
        "hitting_violations": len(hitting_violations(h0, art.partition)),
        "per_color": per_color,
    }


# -- benchmarking ---------------------------------------------------------


def sample_queries(n: int, f: int, count: int, seed: int) -> list[tuple[int, int, tuple]]:
    """Uniform s != t, then |F| uniform in 0..f and F uniform among subsets
    of that size avoiding s and t."""
    rng = random.Random(seed)
    out = []
    if n < 2:
        return out
    for _ in range(count):
        s, t = rng.sample(range(n), 2)
        k = rng.randint(0, min(f, n - 2))
        pool = [v for v in range(n) if v != s and v != t]
        out.append((s, t, tuple(sorted(rng.sample(pool, k)))))
    return out


def check_graph_matches(g: Graph, labels: list[FinalLabel]) -> None:
    if len(labels) != g.n or (labels and labels[0].header.n != g.n):
        raise ValueError(f"graph has {g.n} vertices but labels describe {len(labels)}")
    comp = g.components()
    pairs = {(comp[lab.vid], lab.gcomp) for lab in labels}
    if len({a for a, _ in pairs}) != len(pairs) or len({b for _, b in pairs}) != len(pairs):
        raise ValueError("graph components disagree with the labels")


def run_bench(g: Graph, labels: list[FinalLabel], queries: int, seed: int) -> dict:
    check_graph_matches(g, labels)
    f = labels[0].header.f if labels else 1
    qs = sample_queries(g.n, f, queries, seed)
    counts = {"queries": len(qs), "agree": 0, "false_connected": 0, "false_disconnected": 0}
    rounds, merges = [], []
    t0 = time.perf_counter()
    for s, t, F in qs:
        res = answer_labels(labels[s], labels[t], [labels[x] for x in F])
        truth = oracle_connected(g, s, t, F)
        rounds.append(res.rounds)
        merges.append(res.merges)
        if res.connected == truth:
            counts["agree"] += 1
        elif res.connected:
            counts["false_connected"] += 1
        else:
            counts["false_disconnected"] += 1
    elapsed = time.perf_counter() - t0
    errors = counts["false_connected"] + counts["false_disconnected"]
    return {
        **counts,
        "error_rate": errors / len(qs) if qs else 0.0,
        "agreement": counts["agree"] / len(qs) if qs else 1.0,
        "mean_rounds": float(np.mean(rounds)) if rounds else 0.0,
        "mean_merges": float(np.mean(merges)) if merges else 0.0,
        "query_seconds": elapsed,
        "ms_per_query": 1000 * elapsed / len(qs) if qs else 0.0,
    }


# -- verify ---------------------------------------------------------------


def _suite(results: dict, name: str, fn) -> None:
    try:
        msgs = fn()
    except Exception as exc:  # a crashing suite is a failing suite
        msgs = [f"{type(exc).__name__}: {exc}"]
    results[name] = {"passed": not msgs, "failures": msgs[:20], "failure_count": len(msgs)}


def verify_suites(g: Graph, f: int, seed: int = 0, c: float = 8.0, c_sparse: float = 4.0,
                  partition: str = "derandomized", queries: int = 200) -> dict:
    """Build everything for ``g`` and run every property suite."""
    results: dict = {}
    art = build_labels(g, f, seed, c, c_sparse, partition=partition)
    h0 = art.h0

    _suite(results, "decomp_contract",
           lambda: [f"level {i + 1}: {m}" for i, res in enumerate(h0.decomps) for m in check_decomp(g, res, h0.s)])
    base = check_base(g, h0)
    for name in base:
        _suite(results, f"base_{name}", lambda name=name: base[name])
    _suite(results, "hitting_guarantee",
           lambda: [f"gamma {c} misses a colour" for c in hitting_violations(h0, art.partition)]
           if partition == "derandomized" else [])
    for h, aux in zip(art.hierarchies, art.aux):
        rep = check_coarse(g, h0, h)
        for name in rep:
            _suite(results, f"coarse{h.color}_{name}", lambda name=name, rep=rep: rep[name])
        _suite(results, f"aux{h.color}_structure", lambda h=h, aux=aux: _aux_checks(g, h, aux))
    _suite(results, "sketch_algebra", lambda: _sketch_checks(art, seed))
    _suite(results, "label_round_trip", lambda: _label_checks(art))
    _suite(results, "stored_sketches", lambda: _stored_sketch_checks(art))
    _suite(results, "query_invariants", lambda: _query_checks(art, seed, min(queries, 50)))
    bench = run_bench(g, art.labels, queries, seed)
    _suite(results, "query_agreement",
           lambda: [f"error rate {bench['error_rate']:.4f} above 0.01"] if bench["error_rate"] > 0.01 else [])
    _suite(results, "false_connected",
           lambda: [f"{bench['false_connected']} false connected answers"] if bench["false_connected"] else [])
    return {"suites": results, "bench": bench, "hierarchy": hierarchy_stats(art)}


def _aux_checks(g: Graph, h, aux) -> list[str]:
    msgs = []
    full = build_aux_graph(g, h)
    for a, b, _ in full.edges:
        if not (h.is_ancestor(h.comp_of[a], h.comp_of[b]) or h.is_ancestor(h.comp_of[b], h.comp_of[a])):
            msgs.append(f"aux edge ({a},{b}) joins unrelated components")
    adj: dict[int, set[int]] = {v: set() for v in range(g.n)}
    for a, b, _ in full.edges:
        adj[a].add(b)
        adj[b].add(a)
    for K in range(len(h)):
        inside = set(h.subtree[K])
        hat = {y for x in inside for y in adj[x]} - inside
        if hat != set(h.neighbors[K]):
            msgs.append(f"neighbourhood of K{K + 1} changes in the auxiliary graph")
    seen = set()
    for v, out in enumerate(aux.out_edges):
        for e in out:
            if e[0] != v:
                msgs.append(f"out-edge list of {v} holds {e}")
            key = (min(e[0], e[1]), max(e[0], e[1]), e[2])
            if key in seen:
                msgs.append(f"edge {key} oriented twice")
            seen.add(key)
    if seen - set(full.edges):
        msgs.append("sparsified edges outside the auxiliary graph")
    return msgs


def _sketch_checks(art: BuildArtifacts, seed: int, trials: int = 50) -> list[str]:
    params = art.params
    h = art.hierarchies[0]
    edges = art.aux[0].oriented or []
    if not edges:
        return []
    rng = random.Random(seed)
    msgs = []
    for _ in range(trials):
        A = rng.sample(edges, rng.randint(0, min(20, len(edges))))
        B = rng.sample(edges, rng.randint(0, min(20, len(edges))))
        sym = set(A) ^ set(B)
        if merge(sketch_of(params, A, h.anc), sketch_of(params, B, h.anc)) != sketch_of(params, sorted(sym), h.anc):
            msgs.append("merge is not linear")
        e = rng.choice(edges)
        single = sketch_of(params, [e], h.anc)
        eid = single.rows[0] if single.nnz else None
        if eid is not None and sketch_of_single(params, eid) != single:
            msgs.append(f"single-edge sketch mismatch for {e}")
    return msgs


def _label_checks(art: BuildArtifacts) -> list[str]:
    msgs = []
    for lab in art.labels:
        data, nbits = encode_label(lab)
        back = decode_label(data, nbits)
        if encode_label(back) != (data, nbits):
            msgs.append(f"label {lab.vid} does not round-trip")
        for i, hl in enumerate(lab.hier):
            h = art.hierarchies[i]
            want = [h.comp_id(A) for A in h.ancestors(h.comp_of[lab.vid])]
            if [cl.cid for cl in hl.chain] != want:
                msgs.append(f"label {lab.vid} colour {i + 1} has an incomplete ancestor chain")
    return msgs


def _stored_sketch_checks(art: BuildArtifacts) -> list[str]:
    """Recompute every stored sketch from the sparsified edge set."""
    msgs = []
    params = art.params
    for i, (h, aux) in enumerate(zip(art.hierarchies, art.aux)):
        edges = aux.oriented or []
        up: dict[int, list] = {v: [] for v in range(h.n)}
        for e in edges:
            ka, kb = h.comp_of[e[0]], h.comp_of[e[1]]
            if h.is_ancestor(kb, ka):
                up[e[0]].append(e)
            if h.is_ancestor(ka, kb):
                up[e[1]].append(e)
        up_sk = {v: sketch_of(params, up[v], h.anc) for v in range(h.n)}

        def subtree(v):
            return merge(*[up_sk[u] for u in h.subtree_of_vertex(v)])

        for lab in art.labels:
            hl = lab.hier[i]
            cl = hl.chain[0]
            K = h.comp_of[lab.vid]
            if lab.vid == h.root[K] and cl.sketch_up != subtree(lab.vid):
                msgs.append(f"colour {i + 1}: sketch_up of K{K + 1} differs")
            if lab.vid == h.root[K]:
                for ent in cl.entries:
                    want = [e for e in edges if ent.vid in (e[0], e[1])
                            and (h.comp_of[e[0] if e[1] == ent.vid else e[1]] == K) != (e[2] == h.comp_id(K))]
                    if ent.sketch != sketch_of(params, want, h.anc):
                        msgs.append(f"colour {i + 1}: neighbour entry {ent.vid} of K{K + 1} differs")
            if not hl.in_s:
                if hl.sub_sketch != subtree(lab.vid):
                    msgs.append(f"colour {i + 1}: subtree sketch of {lab.vid} differs")
                outs = sorted(aux.out_edges[lab.vid])
                if sketch_of_eids(params, hl.out_eids) != sketch_of(params, outs, h.anc):
                    msgs.append(f"colour {i + 1}: out-edges of {lab.vid} differ")
    return msgs


def _query_checks(art: BuildArtifacts, seed: int, count: int) -> list[str]:
    """Initial parts: membership against direct tree splitting, and sketches
    against direct recomputation of the cut in the sparsified query graph."""
    msgs = []
    g, params = art.g, art.params
    for s, t, F in sample_queries(g.n, art.header.f, count, seed + 1):
        labs = art.labels
        comp = g.components()
        if comp[s] != comp[t]:
            continue
        Fq = [x for x in F if comp[x] == comp[s]]
        color = select_color(art.header.f, [labs[x] for x in F])
        h, aux = art.hierarchies[color - 1], art.aux[color - 1]
        parts, dense, locate = init_partition(params, color, labs[s], labs[t], [labs[x] for x in Fq])
        aff = affected_components(h, (s, t, *Fq))
        verts, valid = query_graph(aux, s, t, Fq, sparsified=True)
        gone = set(Fq)
        # direct parts: components of the union of T(K) - F over affected K
        uf = UnionFind(g.n)
        for K in aff:
            for a, b in h.tree_edges(K):
                if a not in gone and b not in gone:
                    uf.union(a, b)
        groups: dict[int, set[int]] = {}
        for v in verts - gone:
            groups.setdefault(uf.find(v), set()).add(v)
        got: dict[int, set[int]] = {}
        for v in verts - gone:
            k = locate(h.anc(v))
            if k is None:
                msgs.append(f"vertex {v} in no part")
                continue
            got.setdefault(k, set()).add(v)
        if sorted(map(sorted, groups.values())) != sorted(map(sorted, got.values())):
            msgs.append(f"query {(s, t, F)}: initial parts differ from T(K) - F components")
            continue
        validset = set(valid)
        for k, members in got.items():
            cut = [e for e in validset if (e[0] in members) != (e[1] in members)]
            into = [e for e in cut if e[0] in gone]
            want = sorted(set(cut) - set(into))
            if from_dense(dense[k]) != sketch_of(params, want, h.anc):
                msgs.append(f"query {(s, t, F)}: sketch of part {k} differs from recomputation")
    return msgs


def config_dict(cfg: ExperimentConfig) -> dict:
    return asdict(cfg)


def build_report(art: BuildArtifacts, cfg: ExperimentConfig) -> dict:
    return {
        "config": config_dict(cfg),
        "labels": label_stats(art.labels),
        "hierarchy": hierarchy_stats(art),
        "timings": art.timings,
    }
