"""Build labels for a small random graph, ship them as bytes, and answer
fault queries from the bytes alone, checking each answer by brute force."""

import random

from ftconn import build_labels, generate, oracle_connected
from ftconn.labels import encode_label
from ftconn.query import answer_bytes

g = generate("gnp", 60, 0.07, seed=3)
art = build_labels(g, f=2, seed=1)
blobs = [encode_label(lab) for lab in art.labels]
print(f"graph: n={g.n} m={g.m}; mean label {sum(b[1] for b in blobs) / g.n / 8 / 1024:.1f} KiB")

rng = random.Random(0)
agree = 0
for _ in range(20):
    s, t = rng.sample(range(g.n), 2)
    F = rng.sample([v for v in range(g.n) if v not in (s, t)], 2)
    got = answer_bytes(blobs[s], blobs[t], [blobs[v] for v in F])
    want = oracle_connected(g, s, t, F)
    agree += got == want
    print(f"s={s:2d} t={t:2d} F={F}: {'connected' if got else 'disconnected':12s} oracle={want}")
print(f"{agree}/20 answers match the oracle")
