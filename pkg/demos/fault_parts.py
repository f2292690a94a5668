"""Show how faults split a component tree into initial parts, then follow
the Boruvka merges that decide one query."""

from ftconn import Graph, build_labels
from ftconn.query import answer_labels, init_partition, select_color

#        0
#      / | \
#     1  2  3
#    /|\  |\ \
#   4 5 6 7 8 9
#        / \
#      10   12
#       |
#      11
edges = [(0, 1), (0, 2), (0, 3), (1, 4), (1, 5), (1, 6), (2, 7), (2, 8), (2, 9),
         (7, 10), (7, 12), (10, 11), (3, 9), (9, 12), (4, 8)]
g = Graph.from_edges(13, edges)
art = build_labels(g, f=3, seed=0)
L = art.labels
F = [1, 2, 10]

color = select_color(3, [L[v] for v in F])
h = art.hierarchies[color - 1]
parts, _, locate = init_partition(art.params, color, L[0], L[12], [L[v] for v in F])
groups = {}
for v in range(g.n):
    if v not in F:
        groups.setdefault(locate(h.anc(v)), []).append(v)
print(f"faults {F} avoided by colour {color}; {len(parts)} initial parts:")
for k in sorted(groups):
    print(f"  part {k}: {groups[k]}")

res = answer_labels(L[0], L[12], [L[v] for v in F], transcript=True)
print("\n".join(res.transcript) or "(no merges)")
print(f"0 and 12 are {'connected' if res.connected else 'disconnected'} after {res.rounds} rounds")
