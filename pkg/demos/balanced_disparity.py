"""
Balanced sentiment, maximal disparity
=====================================

Under Friedkin-Johnsen dynamics the expressed opinions are
``z = (I + L)^-1 s``. If both groups hold the same total sentiment, the
worst disparity a graph admits is ``1 / (1 + lambda_2)^2``, achieved by
splitting on the sign of the Fiedler vector and using its magnitudes as
opinions. Poorly connected graphs (small ``lambda_2``) are the ones where
two equally strong camps stay furthest apart.
"""
import numpy as np

from disparity_lab import datasets, disparity_fj, fj_max_balanced
from disparity_lab.cli import TABLE1_COLUMNS, table1_row

# %%
# The construction on Zachary's karate club (weighted edges).
g = datasets.karate()
r = fj_max_balanced(g)
print(f"lambda_2 = {r.diagnostics['lambda_2']:.4f}, disparity = {r.value:.4f}")
print(f"sizes |A| = {r.partition.size_a}, |B| = {r.partition.size_b}")

# %%
# The closed form agrees with evaluating the quadratic form directly.
print("evaluated:", disparity_fj(g, r.opinions, r.partition))

# %%
# No balanced pair of random opinions on the same split does worse.
rng = np.random.default_rng(0)
worst = 0.0
for _ in range(2000):
    s = rng.random(g.n)
    a, b = s[r.partition.in_a], s[r.partition.in_b]
    s[r.partition.in_b] *= a.sum() / b.sum()
    s /= np.linalg.norm(s)
    worst = max(worst, disparity_fj(g, s, r.partition))
print(f"largest of 2000 balanced random draws: {worst:.4f}")

# %%
# Summary rows for the bundled networks. Sentiment imbalance and the
# mixing-time bound depend on the seeded random opinions.
for name in datasets.BUNDLED:
    row = table1_row(name, datasets.load(name))
    print(", ".join(f"{k}={row[k]:.4g}" if isinstance(row[k], float) else f"{k}={row[k]}" for k in TABLE1_COLUMNS))
