"""
Surveillance metrics on the San Francisco graph
===============================================

Evaluate one random patrol strategy under every metric and check the
capture probabilities against simulated walks.
"""
import numpy as np

from patrolchain import builtin_sf, chain, j_mht, j_rte, j_sg
from patrolchain.objectives import team_capture_matrix
from patrolchain.oracle import SimConfig, empirical_capture

graph, pi = builtin_sf()
rng = np.random.default_rng(0)

# A strategy is any row-stochastic matrix supported on the graph's edges.
# Random positive parameters pass through |Q| and row normalization.
P = chain.parametrize(rng.random((12, 12)), graph.adjacency)

# Node weights: the target (crime-rate) distribution for the mean hitting
# time, the chain's own stationary distribution for the entropy.
print(f"mean hitting time  {j_mht(P, graph.weights, pi=pi):8.3f} min")
print(f"return entropy     {j_rte(P, graph.weights, eta=0.1):8.3f} nats")
print(f"capture (tau=9)    {j_sg(P, graph.weights, 9):8.4f}")

# The worst (start, attack) pair sets the capture-game value; simulate it.
Lam = team_capture_matrix([P], [graph.weights], 9)
i, j = np.unravel_index(np.argmin(Lam), Lam.shape)
emp = empirical_capture(P, graph.weights, 9, SimConfig(trials=100_000, seed=1), rows=[(i,)])
print(f"worst pair ({i}, {j}): exact {Lam[i, j]:.4f}, simulated {emp.Lambda[0, j]:.4f} "
      f"+/- {emp.stderr[0, j]:.4f}")

# First-hitting laws come from a recursion over travel times; the
# expected elapsed time agrees with the semi-Markov linear solve.
F = chain.hitting_probs(P, graph.weights, 2000).F
k = np.arange(1, 2001)[:, None, None]
print("max |sum k F_k - N|:",
      np.abs((k * F).sum(axis=0) - chain.mean_hitting_weighted(P, graph.weights)).max())
