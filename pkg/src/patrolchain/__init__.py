"""Randomized Markov-chain patrol strategies on weighted graphs.

Three surveillance metrics (mean hitting time, return-time entropy, a
Stackelberg capture game and its multi-robot form), exact reverse-mode
gradients through the strategy parametrization, RMSprop multi-start
optimization, greedy defense-budget placement and a Monte Carlo oracle.
"""
from .chain import (DegenerateRowError, ReducibleChainError, hitting_probs, mean_hitting_hops,
                    mean_hitting_weighted, parametrize, stationary_direct, stationary_power)
from .defense import co_optimize, greedy_defense, uniform_tau
from .gradients import fd_check, grad
from .graph import (GraphValidationError, PatrolGraph, builtin_sf, induced_subgraph, load_graph,
                    save_graph)
from .objectives import (ObjectiveSpec, capture_matrix, evaluate, j_mht, j_rte, j_sg, j_sgm,
                         penalty_multi, penalty_single, team_capture_matrix)
from .optimizer import RunConfig, multi_start, optimize_strategy
from .oracle import SimConfig, empirical_capture, simulate_hitting

__version__ = "0.1.0"

__all__ = [
    "DegenerateRowError", "GraphValidationError", "ObjectiveSpec", "PatrolGraph",
    "ReducibleChainError", "RunConfig", "SimConfig", "builtin_sf", "capture_matrix",
    "co_optimize", "empirical_capture", "evaluate", "fd_check", "grad", "greedy_defense",
    "hitting_probs", "induced_subgraph", "j_mht", "j_rte", "j_sg", "j_sgm", "load_graph",
    "mean_hitting_hops", "mean_hitting_weighted", "multi_start", "optimize_strategy",
    "parametrize", "penalty_multi", "penalty_single", "save_graph", "simulate_hitting",
    "stationary_direct", "stationary_power", "team_capture_matrix", "uniform_tau",
]
