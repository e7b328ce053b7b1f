"""
Two robots: joint strategies versus fixed partitions
====================================================

A team is caught-by-anyone: the tall capture matrix has one row per joint
starting configuration. Compare it with giving each robot its own region.
"""
import numpy as np

from patrolchain import ObjectiveSpec, RunConfig, builtin_sf, induced_subgraph, multi_start
from patrolchain.graph import SF_PARTITIONS_2
from patrolchain.objectives import j_sgm

graph, pi = builtin_sf()

team = ObjectiveSpec("sgm", (graph, graph), pi=pi, tau=9, smoothing=1)
res = multi_start(team, RunConfig(num_inits=3))
P1, P2 = res.best.Ps
print(f"joint strategies: J_SGM = {res.best.metric:.4f}, penalty = {res.best.penalty:.2e}")
assert np.isclose(j_sgm([P1, P2], [graph.weights] * 2, 9), res.best.metric)

# Where does each robot spend its time?
from patrolchain.chain import stationary_direct
np.set_printoptions(precision=2, suppress=True)
print("robot 1 occupancy:", stationary_direct(P1).pi)
print("robot 2 occupancy:", stationary_direct(P2).pi)

for nodes in SF_PARTITIONS_2:
    sub = induced_subgraph(graph, nodes)
    sub_pi = pi[list(nodes)] / pi[list(nodes)].sum()
    spec = ObjectiveSpec("sg", sub, pi=sub_pi, tau=9, smoothing=4)
    best = multi_start(spec, RunConfig(num_inits=5)).best
    print(f"partition {list(nodes)}: J_SG = {best.metric:.4f}")
