"""Edge identifiers and the XOR cut sketch.

Layout of an eid (``W`` little-endian 64-bit words):

  word 0        uid (``uid_bits`` low bits used)
  words 1..W-1  packed fields, low bits first, no field straddles a word:
                tail, head, type, anc(tail) x4, anc(head) x4

A sketch is a ``cells x W`` array of uint64 with
``cells = p * f * (omega + 1)``; cell ``(q, i, j)`` sits at flat index
``(q * f + i) * (omega + 1) + j``.  An edge oriented ``tail -> head``
contributes to cell ``(q, i, j)`` iff ``h_qi(head) == 1`` and
``phi_qi(edge) < 2 ** (omega - j)``.

Stored sketches are sparse (sorted flat indices of non-zero cells plus their
rows); query-time accumulation uses dense arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

PRIME = 4294967291  # largest prime below 2**32
MAX_N = 1624  # keeps every edge key below PRIME
GOLDEN = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1


class SketchError(ValueError):
    pass


def _bitlen(x: int) -> int:
    return max(1, int(x).bit_length())


@dataclass(frozen=True)
class FieldLayout:
    """Bit positions of the packed eid fields."""

    widths: tuple  # (id, type, stamp)
    slots: tuple  # per field: (word, shift, width)
    words: int

    @classmethod
    def for_n(cls, n: int) -> "FieldLayout":
        wid, wtype, wstamp = _bitlen(n - 1), _bitlen(n), _bitlen(2 * n)
        widths = [wid, wid, wtype] + [wstamp] * 8
        slots = []
        word, used = 1, 0
        for w in widths:
            if used + w > 64:
                word, used = word + 1, 0
            slots.append((word, used, w))
            used += w
        return cls((wid, wtype, wstamp), tuple(slots), word + 1)


@dataclass
class SketchParams:
    n: int
    f: int
    c: float = 8.0
    uid_bits: int = 64
    seed_id: int = 0
    seed_hash: int = 0
    p: int = field(init=False)
    omega: int = field(init=False)
    layout: FieldLayout = field(init=False)

    def __post_init__(self):
        if self.n > MAX_N:
            raise SketchError(f"n={self.n} exceeds the hash universe limit {MAX_N}")
        if not 1 <= self.uid_bits <= 64:
            raise SketchError("uid width must be in [1, 64]")
        logn = math.log2(self.n) if self.n > 1 else 1.0
        self.p = max(1, math.ceil(self.c * logn))
        self.omega = math.ceil(math.log2(2 * self.n * self.n * (self.n + 1)))
        self.layout = FieldLayout.for_n(self.n)
        rng = np.random.default_rng(self.seed_hash)
        shape = (self.p, self.f)
        self.h_a = rng.integers(1, PRIME, size=shape, dtype=np.uint64)
        self.h_b = rng.integers(0, PRIME, size=shape, dtype=np.uint64)
        self.phi_a = rng.integers(1, PRIME, size=shape, dtype=np.uint64)
        self.phi_b = rng.integers(0, PRIME, size=shape, dtype=np.uint64)

    @property
    def W(self) -> int:
        return self.layout.words

    @property
    def levels(self) -> int:
        return self.omega + 1

    @property
    def cells(self) -> int:
        return self.p * self.f * self.levels

    @property
    def round_cells(self) -> int:
        return self.f * self.levels

    def dense_bits(self) -> int:
        return self.cells * self.W * 64

    def edge_key(self, tail, head, typ):
        n = np.uint64(self.n)
        return (np.asarray(tail, np.uint64) * n + np.asarray(head, np.uint64)) * (n + np.uint64(1)) + np.asarray(typ, np.uint64)

    def h_hits(self, v) -> np.ndarray:
        """Boolean (..., p, f): h_qi(v) == 1 (the first of 2f buckets)."""
        v = np.asarray(v, np.uint64)[..., None, None]
        return ((self.h_a * v + self.h_b) % np.uint64(PRIME)) % np.uint64(2 * self.f) == 0

    def phi(self, key) -> np.ndarray:
        key = np.asarray(key, np.uint64)[..., None, None]
        val = (self.phi_a * key + self.phi_b) % np.uint64(PRIME)
        if self.omega < 64:
            val = val & np.uint64((1 << self.omega) - 1)
        return val


# -- uids and eids --------------------------------------------------------


def _mix(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def uid(params: SketchParams, tail, head, typ) -> np.ndarray:
    """Keyed 64-bit mix of the oriented, typed edge key (vectorised)."""
    key = params.edge_key(tail, head, typ)
    with np.errstate(over="ignore"):
        z = key * np.uint64(GOLDEN) + np.uint64(params.seed_id & MASK64)
        z = _mix(_mix(z) ^ np.uint64((params.seed_id >> 1) & MASK64))
    if params.uid_bits < 64:
        z = z & np.uint64((1 << params.uid_bits) - 1)
    return z


def encode_eids(params: SketchParams, tail, head, typ, anc_tail, anc_head) -> np.ndarray:
    """eids for k edges: arrays of length k and (k, 4) ancestry stamps -> (k, W)."""
    tail = np.atleast_1d(np.asarray(tail, np.uint64))
    head = np.atleast_1d(np.asarray(head, np.uint64))
    typ = np.atleast_1d(np.asarray(typ, np.uint64))
    anc_tail = np.asarray(anc_tail, np.uint64).reshape(-1, 4)
    anc_head = np.asarray(anc_head, np.uint64).reshape(-1, 4)
    out = np.zeros((tail.size, params.W), dtype=np.uint64)
    out[:, 0] = uid(params, tail, head, typ)
    cols = [tail, head, typ] + [anc_tail[:, j] for j in range(4)] + [anc_head[:, j] for j in range(4)]
    for (word, shift, _), col in zip(params.layout.slots, cols):
        out[:, word] |= col << np.uint64(shift)
    return out


@dataclass(frozen=True)
class DecodedEdge:
    tail: int
    head: int
    type: int
    anc_tail: tuple
    anc_head: tuple


def decode_fields(params: SketchParams, rows: np.ndarray) -> list[np.ndarray]:
    """Field columns of (k, W) rows: tail, head, type, 8 stamps."""
    rows = np.asarray(rows, np.uint64).reshape(-1, params.W)
    out = []
    for word, shift, width in params.layout.slots:
        out.append((rows[:, word] >> np.uint64(shift)) & np.uint64((1 << width) - 1))
    return out


def single_mask(params: SketchParams, rows: np.ndarray) -> np.ndarray:
    """Rows that pass the uid check, i.e. hold exactly one eid (w.h.p.)."""
    rows = np.asarray(rows, np.uint64).reshape(-1, params.W)
    cols = decode_fields(params, rows)
    tail, head, typ = cols[0], cols[1], cols[2]
    n = np.uint64(params.n)
    ok = (tail < n) & (head < n) & (typ <= n) & (tail != head)
    ok &= uid(params, np.minimum(tail, n - np.uint64(1)), np.minimum(head, n - np.uint64(1)), np.minimum(typ, n)) == rows[:, 0]
    return ok


def decode_single(params: SketchParams, row) -> DecodedEdge | None:
    """The edge whose eid equals ``row``, or None if the row is not a single eid."""
    row = np.asarray(row, np.uint64).reshape(1, params.W)
    if not single_mask(params, row)[0]:
        return None
    c = [int(x[0]) for x in decode_fields(params, row)]
    return DecodedEdge(c[0], c[1], c[2], tuple(c[3:7]), tuple(c[7:11]))


# -- sketches -------------------------------------------------------------


@dataclass(frozen=True)
class Sketch:
    """Sparse sketch: sorted flat cell indices and their (k, W) rows."""

    idx: np.ndarray
    rows: np.ndarray

    @classmethod
    def empty(cls, W: int) -> "Sketch":
        return cls(np.zeros(0, np.int64), np.zeros((0, W), np.uint64))

    @property
    def nnz(self) -> int:
        return int(self.idx.size)

    def to_dense(self, params: SketchParams) -> np.ndarray:
        out = np.zeros((params.cells, params.W), np.uint64)
        out[self.idx] = self.rows
        return out

    def xor_into(self, dense: np.ndarray) -> None:
        dense[self.idx] ^= self.rows

    def __eq__(self, other):
        return (isinstance(other, Sketch) and np.array_equal(self.idx, other.idx)
                and np.array_equal(self.rows, other.rows))

    __hash__ = None


def from_dense(dense: np.ndarray) -> Sketch:
    nz = np.flatnonzero(dense.any(axis=1))
    return Sketch(nz.astype(np.int64), dense[nz].copy())


def _compact(idx: np.ndarray, rows: np.ndarray) -> Sketch:
    if idx.size == 0:
        return Sketch(idx.astype(np.int64), rows.reshape(0, rows.shape[1]))
    order = np.argsort(idx, kind="stable")
    idx, rows = idx[order], rows[order]
    uniq, start = np.unique(idx, return_index=True)
    acc = np.bitwise_xor.reduceat(rows, start, axis=0)
    keep = acc.any(axis=1)
    return Sketch(uniq[keep].astype(np.int64), acc[keep])


def merge(*sketches: Sketch) -> Sketch:
    """XOR of sparse sketches."""
    if not sketches:
        raise SketchError("merge needs at least one sketch")
    W = sketches[0].rows.shape[1]
    if any(s.rows.shape[1] != W for s in sketches):
        raise SketchError("sketch width mismatch")
    if len(sketches) == 1:
        return sketches[0]
    return _compact(np.concatenate([s.idx for s in sketches]), np.concatenate([s.rows for s in sketches]))


def merge_dense(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape != b.shape:
        raise SketchError(f"dimension mismatch {a.shape} vs {b.shape}")
    return a ^ b


def contributions(params: SketchParams, head, key) -> tuple[np.ndarray, np.ndarray]:
    """(edge index, flat cell) pairs for k edges with given heads and keys."""
    head = np.atleast_1d(np.asarray(head, np.uint64))
    key = np.atleast_1d(np.asarray(key, np.uint64))
    hits = params.h_hits(head)  # (k, p, f)
    phis = params.phi(key)  # (k, p, f)
    e_idx, q_idx, i_idx = np.nonzero(hits)
    if e_idx.size == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    vals = phis[e_idx, q_idx, i_idx]
    pows = np.uint64(1) << np.arange(params.omega + 1, dtype=np.uint64)
    bitlen = np.searchsorted(pows, vals, side="right").astype(np.int64)
    top = params.omega - bitlen  # cells j = 0..top
    counts = top + 1
    base = (q_idx * params.f + i_idx) * params.levels
    rep_e = np.repeat(e_idx, counts)
    rep_base = np.repeat(base, counts)
    offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    return rep_e.astype(np.int64), (rep_base + offs).astype(np.int64)


def sketch_of_eids(params: SketchParams, eids: np.ndarray) -> Sketch:
    """Sketch of the edge set whose eids are the rows of ``eids``."""
    eids = np.asarray(eids, np.uint64).reshape(-1, params.W)
    if eids.shape[0] == 0:
        return Sketch.empty(params.W)
    cols = decode_fields(params, eids)
    key = params.edge_key(cols[0], cols[1], cols[2])
    e_idx, cells = contributions(params, cols[1], key)
    return _compact(cells, eids[e_idx])


def sketch_of_single(params: SketchParams, eid_row) -> Sketch:
    return sketch_of_eids(params, np.asarray(eid_row, np.uint64).reshape(1, params.W))


def sketch_of(params: SketchParams, edges, anc) -> Sketch:
    """Sketch of oriented typed edges ``(tail, head, type)``; ``anc(v)`` gives stamps."""
    edges = list(edges)
    if not edges:
        return Sketch.empty(params.W)
    t = [e[0] for e in edges]
    hd = [e[1] for e in edges]
    ty = [e[2] for e in edges]
    eids = encode_eids(params, t, hd, ty, [anc(x) for x in t], [anc(x) for x in hd])
    return sketch_of_eids(params, eids)


def get_edge(params: SketchParams, round_rows: np.ndarray, faults=()) -> DecodedEdge | None:
    """First cell of a round block that isolates one edge avoiding ``faults``."""
    round_rows = np.asarray(round_rows, np.uint64).reshape(-1, params.W)
    nz = np.flatnonzero(round_rows.any(axis=1))
    if nz.size == 0:
        return None
    rows = round_rows[nz]
    ok = single_mask(params, rows)
    if not ok.any():
        return None
    cols = decode_fields(params, rows)
    if len(faults):
        fa = np.asarray(list(faults), np.uint64)
        ok &= ~np.isin(cols[0], fa) & ~np.isin(cols[1], fa)
    hit = np.flatnonzero(ok)
    if hit.size == 0:
        return None
    k = int(hit[0])
    c = [int(x[k]) for x in cols]
    return DecodedEdge(c[0], c[1], c[2], tuple(c[3:7]), tuple(c[7:11]))


def round_slice(params: SketchParams, q: int) -> slice:
    """Rows of round q (0-based) in a dense sketch."""
    return slice(q * params.round_cells, (q + 1) * params.round_cells)
