"""
Random two-group graphs and vertex contraction
==============================================

On two cliques joined by random cross edges the smallest achievable FJ
disparity, ``1 / (1 + lambda_max)^2``, sits between ``1/(n+1)^2`` and
roughly ``1/(1 + np)^2``. Deleting edges can only lower ``lambda_max``.
Contracting vertices is different: merged nodes collect the degrees of
both endpoints, and ``lambda_max`` may grow.
"""
import math

import numpy as np

from disparity_lab import ContractionPlan, Partition, SbmSpec, WeightedGraph, contraction_monotonicity_check
from disparity_lab.random_models import disparity_interval_check, subgraph_eigenvalue_check

# %%
# Where the minimum disparity falls as the cross-edge density grows.
for p in (0.2, 0.5, 0.8, 1.0):
    chk = disparity_interval_check(SbmSpec(200, 100, p=p, seed=7), 5)
    print(f"p = {p:.1f}: median lambda_max {np.median(chk.lambda_max):7.2f}, "
          f"{chk.hits}/5 inside [{chk.lower:.2e}, {chk.upper:.2e}]")

# %%
# Subgraphs never have a larger top eigenvalue.
k8 = WeightedGraph.from_edges(8, [(i, j) for i in range(8) for j in range(i + 1, 8)])
print("edge deletions, violations:", subgraph_eigenvalue_check(k8, 5, 50).violations)

# %%
# Merging the two hubs of a double star yields a bigger star and raises
# lambda_max from 3 + sqrt(7) to 7, so the minimum disparity drops.
edges = [(0, 1)] + [(0, i) for i in (2, 3, 4)] + [(1, i) for i in (5, 6, 7)]
g = WeightedGraph.from_edges(8, edges)
rep = contraction_monotonicity_check(g, np.full(8, 1 / math.sqrt(8)), Partition.from_members(8, [0, 2, 3, 4]),
                                     ContractionPlan(((0, 1, "A"),)))
print(f"lambda_max {rep.lambda_before:.3f} -> {rep.lambda_after:.3f}; "
      f"min disparity {rep.before:.4f} -> {rep.after:.4f}")
