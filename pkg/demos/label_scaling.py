"""Mean label length as n and f grow, encoded and in the nominal dense layout."""

from ftconn import build_labels, generate, label_stats

print(f"{'n':>5} {'f':>2} {'mean kbit':>10} {'dense kbit':>11}")
for n, f in [(64, 1), (128, 1), (256, 1), (512, 1), (64, 2), (64, 3), (64, 4)]:
    art = build_labels(generate("gnp", n, 6.0 / n, seed=0), f, seed=0)
    st = label_stats(art.labels)
    print(f"{n:>5} {f:>2} {st['mean_bits'] / 1000:>10.1f} {st['mean_dense_bits'] / 1000:>11.1f}")
