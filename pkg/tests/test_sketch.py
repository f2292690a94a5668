import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftconn.hierarchy import build_base_hierarchy, coarsen, random_partition
from ftconn.sketch import (
    MAX_N,
    PRIME,
    FieldLayout,
    Sketch,
    SketchError,
    SketchParams,
    contributions,
    decode_single,
    encode_eids,
    from_dense,
    get_edge,
    merge,
    merge_dense,
    round_slice,
    single_mask,
    sketch_of,
    sketch_of_single,
    uid,
)

from conftest import kary_graph


def params_for(n=64, f=2, **kw):
    return SketchParams(n, f, seed_id=kw.pop("seed_id", 17), seed_hash=kw.pop("seed_hash", 23), **kw)


def fake_anc(v):
    return (1 + v % 7, 20 + v % 5, 1 + v % 11, 30 + v % 3)


def random_edges(rng, n, k):
    out = set()
    while len(out) < k:
        a, b = rng.sample(range(n), 2)
        out.add((a, b, rng.choice([0, 0, rng.randint(1, n)])))
    return sorted(out)


def eids_of(params, edges):
    t = [e[0] for e in edges]
    h = [e[1] for e in edges]
    ty = [e[2] for e in edges]
    return encode_eids(params, t, h, ty, [fake_anc(x) for x in t], [fake_anc(x) for x in h])


# -- parameters and layout ------------------------------------------------


def test_parameters():
    p = params_for(256, 3)
    assert p.p == 64
    assert p.omega == math.ceil(math.log2(2 * 256 * 256 * 257))
    assert p.cells == 64 * 3 * (p.omega + 1)
    assert p.dense_bits() == p.cells * p.W * 64
    assert PRIME > MAX_N * MAX_N * (MAX_N + 1)
    with pytest.raises(SketchError):
        SketchParams(MAX_N + 1, 1)
    with pytest.raises(SketchError):
        SketchParams(10, 1, uid_bits=0)


@pytest.mark.parametrize("n", [2, 10, 64, 256, 1000, MAX_N])
def test_layout_fields_do_not_straddle_words(n):
    lay = FieldLayout.for_n(n)
    assert lay.widths == (max(1, (n - 1).bit_length()), n.bit_length(), (2 * n).bit_length())
    for word, shift, width in lay.slots:
        assert 1 <= word < lay.words and shift + width <= 64


def test_same_seed_same_hashes():
    a, b = params_for(), params_for()
    assert np.array_equal(a.h_a, b.h_a) and np.array_equal(a.phi_b, b.phi_b)
    c = params_for(seed_hash=24)
    assert not np.array_equal(a.h_a, c.h_a)


# -- ancestry labels ------------------------------------------------------


def test_anc_labels_decide_ancestry():
    g = kary_graph(21)
    h0 = build_base_hierarchy(g)
    h = coarsen(g, h0, random_partition(g.n, 1, 21), 2)
    rng = random.Random(0)
    n = g.n
    for v in range(n):
        a = h.anc(v)
        assert a == h.anc(v)
        r = h.root[h.comp_of[v]]
        ar = h.anc(r)
        assert ar[2] <= a[2] and a[3] <= ar[3]
        assert 1 <= a[0] < a[1] and 1 <= a[2] < a[3]
    for _ in range(500):
        u, v = rng.sample(range(n), 2)
        au, av = h.anc(u), h.anc(v)
        comp_anc = au[0] <= av[0] and av[1] <= au[1]
        assert comp_anc == h.is_ancestor(h.comp_of[u], h.comp_of[v])
        same = au[:2] == av[:2]
        assert same == (h.comp_of[u] == h.comp_of[v])
        if same:
            tree_anc = au[2] <= av[2] and av[3] <= au[3]
            assert tree_anc == (v in h.subtree_of_vertex(u))


# -- uids and eids --------------------------------------------------------


def test_uid_deterministic_and_type_sensitive():
    p = params_for(1000, 1)
    rng = np.random.default_rng(0)
    t = rng.integers(0, 1000, 100_000)
    h = (t + rng.integers(1, 1000, 100_000)) % 1000
    ty = rng.integers(0, 1000, 100_000)
    a = uid(p, t, h, ty)
    assert np.array_equal(a, uid(p, t, h, ty))
    assert np.all(a != uid(p, t, h, ty + 1))
    assert np.all(uid(p, t, h, 0) != uid(p, h, t, 0))


def test_uid_xor_collisions():
    p = params_for(1000, 1)
    rng = random.Random(1)
    universe = random_edges(rng, 1000, 1000)
    eids = eids_of(p, universe)
    nrng = np.random.default_rng(2)
    rows = np.zeros((100_000, p.W), np.uint64)
    sizes = nrng.integers(2, 11, 100_000)
    for i, k in enumerate(sizes):
        idx = nrng.choice(1000, size=k, replace=False)
        rows[i] = np.bitwise_xor.reduce(eids[idx], axis=0)
    assert not single_mask(p, rows).any()


def test_decode_single():
    p = params_for(100, 2)
    rng = random.Random(3)
    edges = random_edges(rng, 100, 200)
    eids = eids_of(p, edges)
    for e, row in zip(edges, eids):
        d = decode_single(p, row)
        assert (d.tail, d.head, d.type) == e
        assert d.anc_tail == fake_anc(e[0]) and d.anc_head == fake_anc(e[1])
    assert decode_single(p, np.zeros(p.W, np.uint64)) is None
    pairs = np.random.default_rng(4).integers(0, 200, size=(100_000, 2))
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    assert not single_mask(p, eids[pairs[:, 0]] ^ eids[pairs[:, 1]]).any()


# -- sketches -------------------------------------------------------------


def test_sketch_self_cancels_and_single_matches():
    p = params_for(64, 3)
    rng = random.Random(5)
    edges = random_edges(rng, 64, 40)
    sk = sketch_of(p, edges, fake_anc)
    assert merge(sk, sk).nnz == 0
    for e in edges:
        row = eids_of(p, [e])[0]
        assert sketch_of_single(p, row) == sketch_of(p, [e], fake_anc)


def test_dense_round_trip_and_errors():
    p = params_for(64, 2)
    sk = sketch_of(p, random_edges(random.Random(6), 64, 30), fake_anc)
    d = sk.to_dense(p)
    assert from_dense(d) == sk
    other = Sketch.empty(p.W)
    other_dense = other.to_dense(p)
    sk.xor_into(other_dense)
    assert np.array_equal(other_dense, d)
    with pytest.raises(SketchError):
        merge(sk, Sketch.empty(p.W + 1))
    with pytest.raises(SketchError):
        merge_dense(d, d[:-1])
    with pytest.raises(SketchError):
        merge()


def test_membership_rule():
    p = params_for(50, 2)
    edges = random_edges(random.Random(7), 50, 30)
    tail = np.array([e[0] for e in edges])
    head = np.array([e[1] for e in edges])
    key = p.edge_key(tail, head, [e[2] for e in edges])
    e_idx, cells = contributions(p, head, key)
    got = set(zip(e_idx.tolist(), cells.tolist()))
    hits, phis = p.h_hits(head), p.phi(key)
    want = set()
    for k in range(len(edges)):
        for q in range(p.p):
            for i in range(p.f):
                for j in range(p.levels):
                    if hits[k, q, i] and int(phis[k, q, i]) < 2 ** (p.omega - j):
                        want.add((k, (q * p.f + i) * p.levels + j))
    assert got == want


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 40), st.integers(0, 40))
def test_linearity(seed, ka, kb):
    p = params_for(40, 2)
    rng = random.Random(seed)
    universe = random_edges(rng, 40, 60)
    A = set(rng.sample(universe, ka))
    B = set(rng.sample(universe, kb))
    assert merge(sketch_of(p, A, fake_anc), sketch_of(p, B, fake_anc)) == sketch_of(p, A ^ B, fake_anc)


# -- hashing and GetEdge statistics ---------------------------------------


@pytest.mark.parametrize("f", [1, 2, 4])
def test_hit_probability(f):
    p = SketchParams(MAX_N, f, seed_hash=f)
    v = np.arange(MAX_N)
    hits = p.h_hits(v)  # (n, p, f)
    trials = hits.size
    assert trials >= 100_000 / 4
    rate = hits.mean()
    sigma = math.sqrt((1 / (2 * f)) * (1 - 1 / (2 * f)) / trials)
    # hash functions are shared across vertices, so allow a wider band than i.i.d.
    assert abs(rate - 1 / (2 * f)) < 6 * sigma + 0.01


def test_get_edge_empty_and_single():
    p = params_for(64, 1)
    empty = np.zeros((p.cells, p.W), np.uint64)
    for q in range(p.p):
        assert get_edge(p, empty[round_slice(p, q)]) is None
    rng = random.Random(8)
    for e in random_edges(rng, 64, 30):
        d = sketch_of(p, [e], fake_anc).to_dense(p)
        hit_rounds = p.h_hits(np.array([e[1]]))[0].any(axis=1)
        for q in range(p.p):
            got = get_edge(p, d[round_slice(p, q)])
            if hit_rounds[q]:
                assert (got.tail, got.head, got.type) == e
            else:
                assert got is None


@pytest.mark.parametrize("f", [1, 2, 3, 4])
def test_get_edge_soundness_and_success(f):
    n = 120
    p = params_for(n, f, seed_hash=100 + f)
    rng = random.Random(f)
    ok = total = 0
    for _ in range(400):
        edges = random_edges(rng, n, rng.randint(1, 60))
        F = set(rng.sample(range(n), f))
        eligible = {e for e in edges if e[0] not in F and e[1] not in F}
        d = sketch_of(p, edges, fake_anc).to_dense(p)
        for q in range(0, p.p, 7):
            got = get_edge(p, d[round_slice(p, q)], F)
            total += bool(eligible)
            if got is not None:
                assert (got.tail, got.head, got.type) in eligible
                ok += 1
    assert ok / total >= 1 / 16
