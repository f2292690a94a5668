"""Component and vertex labels, label assembly, and the binary label format.

Bitstream conventions: fields are written least-significant bit first into a
little-endian bit sequence; the sequence is packed into bytes with bit 0 of
the stream in the low bit of byte 0.  Sketches are written as a flag bit, a
non-zero count, then either the indices of non-zero cells or a presence
bitmap (whichever is shorter), followed by the non-zero rows as raw words.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .auxgraph import AuxGraph, build_aux_graph, sparsify_orient
from .graph import Graph
from .hierarchy import (
    BaseHierarchy,
    CoarseHierarchy,
    ColorPartition,
    build_base_hierarchy,
    coarsen,
    derandomized_partition,
    random_partition,
)
from .sketch import Sketch, SketchParams, contributions, encode_eids, merge

MAGIC = 0x4654  # "FT"
FILE_MAGIC = b"FTCLBL\x00\x01"
VERSION = 1


class LabelFormatError(ValueError):
    pass


# -- in-memory labels -----------------------------------------------------


@dataclass(frozen=True)
class LabelHeader:
    n: int
    f: int
    c: float
    uid_bits: int
    seed_id: int
    seed_hash: int
    version: int = VERSION

    def params(self) -> SketchParams:
        return _params_cache(self)


_PARAMS: dict = {}


def _params_cache(h: LabelHeader) -> SketchParams:
    key = (h.n, h.f, h.c, h.uid_bits, h.seed_id, h.seed_hash)
    if key not in _PARAMS:
        _PARAMS[key] = SketchParams(h.n, h.f, h.c, h.uid_bits, h.seed_id, h.seed_hash)
    return _PARAMS[key]


@dataclass
class NeighborEntry:
    vid: int
    anc: tuple
    sketch: Sketch


@dataclass
class ComponentLabel:
    cid: int
    anc: tuple
    sketch_up: Sketch
    entries: list  # NeighborEntry per u in N(H_K), sorted by vid


@dataclass
class HierLabel:
    anc: tuple
    chain: list  # ComponentLabel of K_v and its ancestors, bottom-up
    in_s: bool
    sub_sketch: Sketch | None = None
    children: list = field(default_factory=list)  # NeighborEntry per tree child
    out_eids: np.ndarray | None = None  # (k, W)


@dataclass
class FinalLabel:
    header: LabelHeader
    vid: int
    color: int
    gcomp: int
    hier: list  # HierLabel per colour 1..f+1

    def to_bytes(self) -> bytes:
        return encode_label(self)[0]

    @property
    def bit_length(self) -> int:
        return encode_label(self)[1]


# -- construction ---------------------------------------------------------


@dataclass
class BuildArtifacts:
    g: Graph
    h0: BaseHierarchy
    partition: ColorPartition
    hierarchies: list  # CoarseHierarchy per colour
    aux: list  # sparsified AuxGraph per colour
    params: SketchParams
    header: LabelHeader
    labels: list  # FinalLabel per vertex
    timings: dict = field(default_factory=dict)


def derive_seeds(seed: int, f: int) -> tuple[int, int, list[int]]:
    rng = np.random.default_rng(seed)
    vals = rng.integers(0, 2**63, size=3 + f, dtype=np.int64).tolist()
    return int(vals[0]), int(vals[1]), [int(x) for x in vals[2:]]


def build_labels(g: Graph, f: int, seed: int = 0, c: float = 8.0, c_sparse: float = 4.0,
                 uid_bits: int = 64, partition: str = "derandomized") -> BuildArtifacts:
    import time

    if f < 1:
        raise ValueError("f must be at least 1")
    t0 = time.perf_counter()
    timings = {}
    h0 = build_base_hierarchy(g)
    timings["base_hierarchy"] = time.perf_counter() - t0
    if partition == "derandomized":
        part = derandomized_partition(h0, f)
    elif partition == "random":
        part = random_partition(g.n, f, seed)
    else:
        raise ValueError(f"unknown partition mode {partition!r}")
    s_id, s_hash, sparse_seeds = derive_seeds(seed, f)
    header = LabelHeader(g.n, f, float(c), uid_bits, s_id, s_hash)
    params = header.params()
    gcomp = g.components()

    t1 = time.perf_counter()
    hierarchies, auxes = [], []
    for color in range(1, f + 2):
        ch = coarsen(g, h0, part, color)
        aux = sparsify_orient(build_aux_graph(g, ch), f, sparse_seeds[color - 1], c_sparse)
        hierarchies.append(ch)
        auxes.append(aux)
    timings["coarsen_sparsify"] = time.perf_counter() - t1

    t2 = time.perf_counter()
    per_hier = [hierarchy_labels(ch, aux, params) for ch, aux in zip(hierarchies, auxes)]
    labels = [
        FinalLabel(header, v, part.colors[v], gcomp[v], [ph[v] for ph in per_hier])
        for v in range(g.n)
    ]
    timings["labels"] = time.perf_counter() - t2
    return BuildArtifacts(g, h0, part, hierarchies, auxes, params, header, labels, timings)


def _grouped_sketches(params: SketchParams, owners: np.ndarray, cells: np.ndarray,
                      rows: np.ndarray) -> dict[int, Sketch]:
    """XOR rows into per-owner sparse sketches."""
    out: dict[int, Sketch] = {}
    if owners.size == 0:
        return out
    key = owners.astype(np.int64) * params.cells + cells
    order = np.argsort(key, kind="stable")
    key, rows = key[order], rows[order]
    uniq, start = np.unique(key, return_index=True)
    acc = np.bitwise_xor.reduceat(rows, start, axis=0)
    keep = acc.any(axis=1)
    uniq, acc = uniq[keep], acc[keep]
    own = uniq // params.cells
    cell = uniq % params.cells
    bounds = np.flatnonzero(np.diff(own)) + 1
    for lo, hi in zip(np.concatenate([[0], bounds]), np.concatenate([bounds, [own.size]])):
        if hi > lo:
            out[int(own[lo])] = Sketch(cell[lo:hi].astype(np.int64), acc[lo:hi])
    return out


def hierarchy_labels(h: CoarseHierarchy, aux: AuxGraph, params: SketchParams) -> list[HierLabel]:
    n = h.n
    W = params.W
    anc = [h.anc(v) for v in range(n)]
    edges = aux.active_edges()
    k = len(edges)
    tail = np.array([e[0] for e in edges], dtype=np.int64)
    head = np.array([e[1] for e in edges], dtype=np.int64)
    typ = np.array([e[2] for e in edges], dtype=np.int64)
    anc_arr = np.array(anc, dtype=np.int64).reshape(n, 4)
    if k:
        eids = encode_eids(params, tail, head, typ, anc_arr[tail], anc_arr[head])
        e_idx, cells = contributions(params, head, params.edge_key(tail, head, typ))
    else:
        eids = np.zeros((0, W), np.uint64)
        e_idx = cells = np.zeros(0, np.int64)

    comp = np.array(h.comp_of, dtype=np.int64)
    pre = np.array(h.pre, dtype=np.int64)
    post = np.array(h.post, dtype=np.int64)
    kt, kh = comp[tail], comp[head]
    # other endpoint's component is an ancestor (or equal) of own component
    t_up = (pre[kh] <= pre[kt]) & (post[kt] <= post[kh])
    h_up = (pre[kt] <= pre[kh]) & (post[kh] <= post[kt])

    # up-sketches per vertex
    own_list, sel_list = [], []
    for mask, end in ((t_up, tail), (h_up, head)):
        sel = mask[e_idx]
        own_list.append(end[e_idx[sel]])
        sel_list.append(np.flatnonzero(sel))
    owners = np.concatenate(own_list)
    picks = np.concatenate(sel_list)
    up = _grouped_sketches(params, owners, cells[picks], eids[e_idx[picks]])

    # neighbour-entry sketches keyed by (vertex, component)
    nK = len(h)
    own_list, sel_list = [], []
    for end, other_comp in ((tail, kh), (head, kt)):
        own_list.append(end[e_idx] * nK + other_comp[e_idx])
        sel_list.append(np.arange(e_idx.size))
    typed = typ[e_idx] > 0
    for end in (tail, head):
        own_list.append(end[e_idx[typed]] * nK + (typ[e_idx[typed]] - 1))
        sel_list.append(np.flatnonzero(typed))
    owners = np.concatenate(own_list)
    picks = np.concatenate(sel_list)
    nbr = _grouped_sketches(params, owners, cells[picks], eids[e_idx[picks]])

    empty = Sketch.empty(W)
    sub: list[Sketch] = [empty] * n
    for K in range(nK):
        order = _postorder(h, h.root[K])
        for v in order:
            parts = [up.get(v, empty)] + [sub[u] for u in h.tree_children[v]]
            sub[v] = merge(*parts) if len(parts) > 1 else parts[0]

    comp_labels = []
    for K in range(nK):
        entries = [NeighborEntry(v, anc[v], nbr.get(v * nK + K, empty)) for v in h.neighbors[K]]
        comp_labels.append(ComponentLabel(h.comp_id(K), anc[h.root[K]], sub[h.root[K]], entries))
    chains = [[comp_labels[A] for A in h.ancestors(K)] for K in range(nK)]

    out_rows: list[list[int]] = [[] for _ in range(n)]
    for i, e in enumerate(edges):
        out_rows[e[0]].append(i)

    labels = []
    for v in range(n):
        K = h.comp_of[v]
        if v in h.S:
            labels.append(HierLabel(anc[v], chains[K], True))
        else:
            kids = [NeighborEntry(u, anc[u], sub[u]) for u in h.tree_children[v]]
            rows = eids[out_rows[v]] if out_rows[v] else np.zeros((0, W), np.uint64)
            labels.append(HierLabel(anc[v], chains[K], False, sub[v], kids, rows))
    return labels


def _postorder(h: CoarseHierarchy, r: int) -> list[int]:
    out, stack = [], [(r, False)]
    while stack:
        v, done = stack.pop()
        if done:
            out.append(v)
        else:
            stack.append((v, True))
            for u in reversed(h.tree_children[v]):
                stack.append((u, False))
    return out


# -- bitstream ------------------------------------------------------------


class BitWriter:
    def __init__(self):
        self.chunks: list[np.ndarray] = []
        self.nbits = 0

    def write(self, value: int, width: int) -> None:
        if width == 0:
            return
        if value < 0 or value >> width:
            raise LabelFormatError(f"value {value} does not fit in {width} bits")
        raw = np.frombuffer(int(value).to_bytes((width + 7) // 8, "little"), dtype=np.uint8)
        self.chunks.append(np.unpackbits(raw, bitorder="little")[:width])
        self.nbits += width

    def write_bits(self, bits: np.ndarray) -> None:
        self.chunks.append(bits.astype(np.uint8))
        self.nbits += bits.size

    def write_words(self, words: np.ndarray) -> None:
        raw = np.ascontiguousarray(words, dtype="<u8").reshape(-1).view(np.uint8)
        self.write_bits(np.unpackbits(raw, bitorder="little"))

    def to_bytes(self) -> bytes:
        if not self.chunks:
            return b""
        bits = np.concatenate(self.chunks)
        return np.packbits(bits, bitorder="little").tobytes()


class BitReader:
    def __init__(self, data: bytes, nbits: int | None = None):
        self.bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
        self.end = self.bits.size if nbits is None else nbits
        self.pos = 0

    def _take(self, width: int) -> np.ndarray:
        if self.pos + width > self.end:
            raise LabelFormatError("truncated label")
        out = self.bits[self.pos : self.pos + width]
        self.pos += width
        return out

    def read(self, width: int) -> int:
        if width == 0:
            return 0
        return int.from_bytes(np.packbits(self._take(width), bitorder="little").tobytes(), "little")

    def read_bits(self, width: int) -> np.ndarray:
        return self._take(width).astype(bool)

    def read_words(self, count: int) -> np.ndarray:
        raw = np.packbits(self._take(64 * count), bitorder="little")
        return np.frombuffer(raw.tobytes(), dtype="<u8").astype(np.uint64)


@dataclass(frozen=True)
class Widths:
    vid: int
    cid: int
    stamp: int
    count: int
    cell: int

    @classmethod
    def of(cls, params: SketchParams) -> "Widths":
        wid, wtype, wstamp = params.layout.widths
        return cls(wid, wtype, wstamp, max(1, params.n.bit_length()) + 1, max(1, params.cells.bit_length()))


class _Sizer:
    """Accumulates bit counts per section for both the encoded and dense layouts."""

    def __init__(self):
        self.actual: dict[str, int] = {}
        self.dense: dict[str, int] = {}
        self.per_color: list[int] = []

    def add(self, section: str, actual: int, dense: int) -> None:
        self.actual[section] = self.actual.get(section, 0) + actual
        self.dense[section] = self.dense.get(section, 0) + dense


def _write_header(w: BitWriter, hd: LabelHeader, params: SketchParams) -> None:
    w.write(MAGIC, 16)
    w.write(hd.version, 8)
    w.write(hd.n, 16)
    w.write(hd.f, 8)
    w.write(int.from_bytes(struct.pack("<d", hd.c), "little"), 64)
    w.write(hd.uid_bits, 8)
    w.write(hd.seed_id, 64)
    w.write(hd.seed_hash, 64)
    w.write(params.p, 16)
    w.write(params.omega, 8)
    w.write(params.W, 8)
    for x in params.layout.widths:
        w.write(x, 8)


HEADER_BITS = 16 + 8 + 16 + 8 + 64 + 8 + 64 + 64 + 16 + 8 + 8 + 24


def _write_anc(w: BitWriter, anc: tuple, wd: Widths) -> None:
    for x in anc:
        w.write(int(x), wd.stamp)


def _write_sketch(w: BitWriter, sk: Sketch, params: SketchParams, wd: Widths) -> int:
    start = w.nbits
    nnz = sk.nnz
    as_list = nnz * wd.cell <= params.cells
    w.write(0 if as_list else 1, 1)
    w.write(nnz, wd.cell)
    if as_list:
        for i in sk.idx.tolist():
            w.write(i, wd.cell)
    else:
        bitmap = np.zeros(params.cells, dtype=np.uint8)
        bitmap[sk.idx] = 1
        w.write_bits(bitmap)
    if nnz:
        w.write_words(sk.rows)
    return w.nbits - start


def _read_sketch(r: BitReader, params: SketchParams, wd: Widths) -> Sketch:
    flag = r.read(1)
    nnz = r.read(wd.cell)
    if flag == 0:
        bits = r.read_bits(nnz * wd.cell).reshape(nnz, wd.cell).astype(np.int64)
        idx = bits @ (np.int64(1) << np.arange(wd.cell, dtype=np.int64))
    else:
        idx = np.flatnonzero(r.read_bits(params.cells)).astype(np.int64)
        if idx.size != nnz:
            raise LabelFormatError("sketch bitmap does not match its count")
    rows = r.read_words(nnz * params.W).reshape(nnz, params.W) if nnz else np.zeros((0, params.W), np.uint64)
    return Sketch(idx, rows)


def encode_label(label: FinalLabel, sizer: _Sizer | None = None) -> tuple[bytes, int]:
    hd = label.header
    params = hd.params()
    wd = Widths.of(params)
    dense_sk = params.dense_bits()
    anc_bits = 4 * wd.stamp
    w = BitWriter()
    sizer = sizer if sizer is not None else _Sizer()

    _write_header(w, hd, params)
    w.write(label.vid, wd.vid)
    w.write(label.color, 8)
    w.write(label.gcomp, wd.vid)
    head_bits = w.nbits
    sizer.add("header", head_bits, head_bits)

    for hl in label.hier:
        start = hier_start = w.nbits
        _write_anc(w, hl.anc, wd)
        w.write(len(hl.chain), 8)
        sizer.add("vertex", w.nbits - start, w.nbits - start)
        for cl in hl.chain:
            s0 = w.nbits
            w.write(cl.cid, wd.cid)
            _write_anc(w, cl.anc, wd)
            w.write(len(cl.entries), wd.count)
            fixed = w.nbits - s0
            _write_sketch(w, cl.sketch_up, params, wd)
            dense = fixed + dense_sk
            for e in cl.entries:
                w.write(e.vid, wd.vid)
                _write_anc(w, e.anc, wd)
                _write_sketch(w, e.sketch, params, wd)
                dense += wd.vid + anc_bits + dense_sk
            sizer.add("component_labels", w.nbits - s0, dense)
        w.write(1 if hl.in_s else 0, 1)
        sizer.add("vertex", 1, 1)
        if not hl.in_s:
            s0 = w.nbits
            _write_sketch(w, hl.sub_sketch, params, wd)
            w.write(len(hl.children), wd.count)
            dense = dense_sk + wd.count
            for e in hl.children:
                w.write(e.vid, wd.vid)
                _write_anc(w, e.anc, wd)
                _write_sketch(w, e.sketch, params, wd)
                dense += wd.vid + anc_bits + dense_sk
            sizer.add("subtree_sketches", w.nbits - s0, dense)
            s0 = w.nbits
            k = hl.out_eids.shape[0]
            w.write(k, 32)
            if k:
                w.write_words(hl.out_eids)
            sizer.add("out_eids", w.nbits - s0, w.nbits - s0)
        sizer.per_color.append(w.nbits - hier_start)
    return w.to_bytes(), w.nbits


def decode_label(data: bytes, nbits: int | None = None) -> FinalLabel:
    r = BitReader(data, nbits)
    if r.read(16) != MAGIC:
        raise LabelFormatError("bad label magic")
    version = r.read(8)
    if version != VERSION:
        raise LabelFormatError(f"unsupported label version {version}")
    n, f = r.read(16), r.read(8)
    c = struct.unpack("<d", r.read(64).to_bytes(8, "little"))[0]
    uid_bits = r.read(8)
    s_id, s_hash = r.read(64), r.read(64)
    hd = LabelHeader(n, f, c, uid_bits, s_id, s_hash, version)
    params = hd.params()
    p, omega, W = r.read(16), r.read(8), r.read(8)
    widths = tuple(r.read(8) for _ in range(3))
    if (p, omega, W, widths) != (params.p, params.omega, params.W, params.layout.widths):
        raise LabelFormatError("label header widths disagree with its parameters")
    wd = Widths.of(params)
    vid, color, gcomp = r.read(wd.vid), r.read(8), r.read(wd.vid)

    def anc():
        return tuple(r.read(wd.stamp) for _ in range(4))

    hier = []
    for _ in range(f + 1):
        a = anc()
        chain = []
        for _ in range(r.read(8)):
            cid, canc = r.read(wd.cid), anc()
            cnt = r.read(wd.count)
            sk = _read_sketch(r, params, wd)
            entries = []
            for _ in range(cnt):
                ev, ea = r.read(wd.vid), anc()
                entries.append(NeighborEntry(ev, ea, _read_sketch(r, params, wd)))
            chain.append(ComponentLabel(cid, canc, sk, entries))
        in_s = bool(r.read(1))
        if in_s:
            hier.append(HierLabel(a, chain, True))
            continue
        sub = _read_sketch(r, params, wd)
        kids = []
        for _ in range(r.read(wd.count)):
            kv, ka = r.read(wd.vid), anc()
            kids.append(NeighborEntry(kv, ka, _read_sketch(r, params, wd)))
        k = r.read(32)
        rows = r.read_words(k * W).reshape(k, W) if k else np.zeros((0, W), np.uint64)
        hier.append(HierLabel(a, chain, False, sub, kids, rows))
    return FinalLabel(hd, vid, color, gcomp, hier)


# -- label files ----------------------------------------------------------


def write_label_file(path, labels: list[FinalLabel], fingerprint: int = 0) -> None:
    """File: 8-byte magic, u32 count, u64 graph fingerprint, then per label
    a u64 bit length followed by the label bytes."""
    with open(path, "wb") as fh:
        fh.write(FILE_MAGIC)
        fh.write(struct.pack("<IQ", len(labels), fingerprint))
        for lab in labels:
            data, nbits = encode_label(lab)
            fh.write(struct.pack("<Q", nbits))
            fh.write(data)


def read_label_buffers(path) -> list[tuple[bytes, int]]:
    return read_label_container(path)[1]


def read_label_container(path) -> tuple[int, list[tuple[bytes, int]]]:
    """(graph fingerprint, per-label (bytes, bit length))."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != FILE_MAGIC or len(blob) < 20:
        raise LabelFormatError("not a label file")
    count, fingerprint = struct.unpack_from("<IQ", blob, 8)
    pos = 20
    out = []
    for _ in range(count):
        if pos + 8 > len(blob):
            raise LabelFormatError("truncated label file")
        (nbits,) = struct.unpack_from("<Q", blob, pos)
        pos += 8
        nbytes = (nbits + 7) // 8
        out.append((blob[pos : pos + nbytes], nbits))
        pos += nbytes
    if pos != len(blob):
        raise LabelFormatError("trailing bytes in label file")
    return fingerprint, out


def read_label_file(path) -> list[FinalLabel]:
    return [decode_label(data, nbits) for data, nbits in read_label_buffers(path)]


# -- statistics -----------------------------------------------------------


def label_stats(labels: list[FinalLabel]) -> dict:
    """Encoded and dense-layout bit totals, with per-section and per-colour
    breakdowns.  Colour totals cover the per-hierarchy bodies only, so they
    sum to the total minus the header section."""
    actual, dense = [], []
    sec_a: dict[str, int] = {}
    sec_d: dict[str, int] = {}
    per_color: list[int] = []
    for lab in labels:
        sz = _Sizer()
        _, nbits = encode_label(lab, sz)
        if sum(sz.actual.values()) != nbits:
            raise LabelFormatError("section accounting does not sum to the label length")
        actual.append(nbits)
        dense.append(sum(sz.dense.values()))
        for k, v in sz.actual.items():
            sec_a[k] = sec_a.get(k, 0) + v
        for k, v in sz.dense.items():
            sec_d[k] = sec_d.get(k, 0) + v
        per_color += [0] * (len(sz.per_color) - len(per_color))
        for i, v in enumerate(sz.per_color):
            per_color[i] += v
    cnt = max(1, len(labels))
    return {
        "count": len(labels),
        "mean_bits": sum(actual) / cnt,
        "max_bits": max(actual, default=0),
        "total_bits": sum(actual),
        "mean_dense_bits": sum(dense) / cnt,
        "max_dense_bits": max(dense, default=0),
        "breakdown_bits": sec_a,
        "breakdown_dense_bits": sec_d,
        "per_color_bits": {str(i + 1): v for i, v in enumerate(per_color)},
    }
