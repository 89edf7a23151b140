"""
A chain with zero DeGroot disparity
===================================

DeGroot agents reach the consensus ``q^T s`` where ``q`` is the stationary
vector of the transition matrix. A regulator who can shape the chain may
pick ``q`` so that both groups pull equally hard, then realize it with
Metropolis-Hastings weights on the existing network. The price is mixing:
the damped cross-group edges slow convergence.
"""
import numpy as np

from disparity_lab import (datasets, disparity_degroot, metropolis_chain, optimal_stationary_degroot,
                           principal_left_eigenvector, row_stochastic, spectral_partition)
from disparity_lab.degroot import mixing_time

g = datasets.karate()
p = spectral_partition(g)
rng = np.random.default_rng(42)

# %%
# Polarized opinions: group A leans low, group B leans high.
s = np.where(p.in_a, rng.beta(2, 8, g.n), rng.beta(8, 2, g.n))
s /= np.linalg.norm(s)

T0 = row_stochastic(g)
q0 = principal_left_eigenvector(T0)
print(f"plain random walk:  disparity = {disparity_degroot(q0, s, p):.4e}")

# %%
# The Metropolis chain targets the balancing distribution.
T = metropolis_chain(g, s, p)
q = principal_left_eigenvector(T)
print(f"Metropolis chain:   disparity = {disparity_degroot(q, s, p):.4e}")
print("target reached:", np.allclose(q, optimal_stationary_degroot(s, p)))

# %%
# Within-group moves keep the usual weights, cross-group moves are damped.
cross = [(i, j) for i, j, _ in g.edges() if p.in_a[i] != p.in_a[j]]
i, j = cross[0]
print(f"edge {i}-{j}: T_ij = {T[i, j]:.4f}, T_ji = {T[j, i]:.4f}")

# %%
# Mixing, before and after.
for label, chain, stat in (("random walk", T0, q0), ("Metropolis", T, q)):
    m = mixing_time(chain, stat, s, 1e-6)
    print(f"{label:12s} steps to 1e-6 in TV: {m.empirical_k}, spectral lower bound {m.spectral_lower_bound:.1f}")
