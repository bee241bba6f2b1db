"""Two-step market definition on a simulated wholesaler panel.

Step one looks at a complete-linkage dendrogram for plausible cluster
counts; step two lets the gap statistic and the elbow pick k and then
fits k-means with many restarts.  Run from the repo root:

    python demos/wholesaler_two_step.py
"""
import numpy as np

from marketdef.clustering import candidate_k, gap_statistic, hclust_complete, kmeans_restarts
from marketdef.dataset import pca2
from marketdef.simulate import simulate_wholesalers

SEED = 1

m = simulate_wholesalers(SEED)
print(f"{len(m.product_ids)} wholesalers, features: {', '.join(m.names)}")

# step one: which cuts of the tree leave the biggest height jumps?
tree = hclust_complete(m.values)
print("dendrogram suggests k in", candidate_k(tree, 3))

# step two: gap statistic against a uniform box, elbow on the same W_k curve
rep = gap_statistic(m.values, 10, B=30, restarts=10, rng=SEED)
print("\n k      W_k    gap     se")
for k, w, g, s in zip(rep.k_range, rep.wk, rep.gap, rep.se):
    print(f"{k:2d} {w:8.3f} {g:6.3f} {s:6.3f}")
print(f"gap picks k={rep.selected_k_gap}, elbow picks k={rep.selected_k_elbow}")

# the two rules often disagree on this recipe; a reviewer would look at both
k = rep.selected_k_gap
fit = kmeans_restarts(m.values, k, 100, SEED)
print(f"\nfinal k={k}: sizes {[int(v) for v in fit.sizes]}, within SS {fit.tot_within_ss:.3f}")
for c in range(k):
    members = [pid for pid, lab in zip(m.product_ids, fit.labels) if lab == c]
    print(f"  cluster {c}: {' '.join(members)}")

proj = pca2(m)
print("first two components explain", [round(v, 3) for v in proj.variance_explained])
