"""Greedy placement of a defense budget and its alternation with strategy optimization."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import chain
from .objectives import ObjectiveSpec, j_sg
from .optimizer import OptimizationError, RunConfig, RunRecord, optimize_strategy, select_best


@dataclass(frozen=True, eq=False)
class DefenseAllocation:
    tau: np.ndarray          # attack duration per node, sums to the budget
    M: np.ndarray            # cumulative capture matrix at tau
    budget_used: int

    @property
    def min_capture(self) -> float:
        return float(self.M.min())


def min_entry_column(M) -> int:
    """Column holding the smallest entry; ties go to the lowest column, then row."""
    return int(np.argmin(M.T, axis=None) // M.shape[0])


def greedy_defense(P, W, budget: int) -> DefenseAllocation:
    """Spend ``budget`` unit increments of attack duration, one at a time,
    on the column of the capture matrix holding its minimum entry.

    Every node first receives one unit so that no attack duration is zero;
    from ``M = 0`` the plain greedy rule would do the same.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    budget = int(budget)
    if budget < n:
        raise ValueError(f"budget below node count: {budget} < {n}")
    F = chain.hitting_probs(P, W, budget - n + 1).F
    tau = np.ones(n, dtype=np.int64)
    M = F[0].copy()
    for _ in range(budget - n):
        j = min_entry_column(M)
        tau[j] += 1
        M[:, j] += F[tau[j] - 1][:, j]
    return DefenseAllocation(tau, M, int(tau.sum()))


def uniform_tau(n: int, budget: int) -> np.ndarray:
    """``budget // n`` per node, remainder to the lowest indices."""
    tau = np.full(n, budget // n, dtype=np.int64)
    tau[: budget % n] += 1
    return tau


@dataclass(eq=False)
class CoOptimizationResult:
    P: np.ndarray
    tau: np.ndarray
    metric: float            # capture probability at (P, tau), smoothing 1
    penalty: float
    record: RunRecord        # strategy run that produced P
    baseline: float          # best round-1 metric (uniform tau), same selection rule
    traces: list[list[tuple]] = field(default_factory=list)


def co_optimize(spec: ObjectiveSpec, budget: int, config: RunConfig, rounds: int = 10) -> CoOptimizationResult:
    """Alternate strategy optimization and greedy defense placement.

    For each seed ``config.seed + k``: start from uniform ``tau``, optimize
    the strategy (warm-starting from the previous round's parameters), then
    re-place the budget greedily; stop when ``tau`` repeats or after
    ``rounds`` rounds. The best ``(P, tau)`` pair seen anywhere is returned,
    using the multi-start feasibility filter on the penalty.
    """
    if spec.metric != "sg":
        raise ValueError("co-optimization applies to the single-robot capture game")
    n = spec.n
    if budget < n:
        raise ValueError(f"budget below node count: {budget} < {n}")
    W = spec.graphs[0].weights
    candidates = []  # (record, P, tau, metric)
    baseline = []
    traces = []
    for k in range(config.num_inits):
        seed = config.seed + k
        tau = uniform_tau(n, budget)
        init = None
        seen = set()
        trace = []
        for rnd in range(rounds):
            record = optimize_strategy(spec.replace(tau=tau), config, seed, init=init)
            if record.failed:
                trace.append((rnd, tau.tolist(), None))
                break
            P = record.Ps[0]
            value = j_sg(P, W, tau)
            candidates.append((record, P, tau, value))
            if rnd == 0:
                baseline.append(candidates[-1])
            seen.add(tuple(tau))
            alloc = greedy_defense(P, W, budget)
            candidates.append((record, P, alloc.tau, alloc.min_capture))
            trace.append((rnd, tau.tolist(), value, alloc.tau.tolist(), alloc.min_capture))
            if tuple(alloc.tau) in seen:
                break
            tau, init = alloc.tau, record.Qs
        traces.append(trace)
    if not candidates:
        raise OptimizationError("all runs failed")
    record, P, tau, value = candidates[_select(candidates)]
    base = baseline[_select(baseline)][3] if baseline else float("nan")
    return CoOptimizationResult(P, np.asarray(tau), value, record.penalty, record, base, traces)


def _select(candidates) -> int:
    proxies = [RunRecord(seed=c[0].seed, metric=c[3], penalty=c[0].penalty) for c in candidates]
    return select_best(proxies, maximize=True)
