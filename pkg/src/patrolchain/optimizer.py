"""RMSprop local search over parameter matrices with multi-start."""
from __future__ import annotations

import dataclasses
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import chain
from .autodiff import NonFiniteError
from .gradients import grad
from .objectives import ObjectiveSpec, evaluate


class OptimizationError(RuntimeError):
    pass


# The relative-change stopping rule halts mean-hitting-time runs within a
# few dozen iterations at smaller rates. The team game (raw minimum, no
# smoothing) keeps switching its minimizing entry at 0.02 and runs to the
# iteration cap; below 0.01 it stops before the minimum has moved much.
DEFAULT_LEARNING_RATE = {"mht": 0.1, "rte": 0.02, "sg": 0.02, "sgm": 0.015}


@dataclass(frozen=True)
class RunConfig:
    learning_rate: float | None = None  # None: per-metric default
    rmsprop_decay: float = 0.9
    rmsprop_epsilon: float = 1e-8
    stop_window: int = 10
    stop_threshold: float = 0.01
    max_iters: int = 20000
    num_inits: int = 1
    seed: int = 0
    progress_every: int = 0  # 0 disables progress lines on stderr
    workers: int = 1

    def __post_init__(self):
        if (self.learning_rate is not None and self.learning_rate <= 0) \
                or self.rmsprop_epsilon <= 0 or self.stop_threshold <= 0:
            raise ValueError("learning rate, epsilon and stop threshold must be positive")
        if not 0 < self.rmsprop_decay < 1:
            raise ValueError("rmsprop_decay must lie in (0, 1)")
        if self.stop_window < 2:
            raise ValueError("stop_window must be >= 2")
        if self.max_iters < 1 or self.num_inits < 1 or self.workers < 1:
            raise ValueError("max_iters, num_inits and workers must be positive")

    def for_metric(self, metric: str) -> "RunConfig":
        """Fill in the per-metric learning rate when none was given."""
        if self.learning_rate is not None:
            return self
        return dataclasses.replace(self, learning_rate=DEFAULT_LEARNING_RATE[metric])


@dataclass(eq=False)
class RunRecord:
    seed: int
    history: list[float] = field(default_factory=list)
    Qs: list[np.ndarray] = field(default_factory=list)
    Ps: list[np.ndarray] = field(default_factory=list)
    metric: float = float("nan")  # reported metric, smoothing 1, no penalty
    penalty: float = float("nan")
    wall_time: float = 0.0
    failed: bool = False
    message: str = ""

    @property
    def iterations(self) -> int:
        return len(self.history)

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "iterations": self.iterations,
            "metric": self.metric,
            "penalty": self.penalty,
            "wall_time": self.wall_time,
            "failed": self.failed,
            "message": self.message,
            "history": list(self.history),
        }


def rmsprop_step(Qs, grads, state, config: RunConfig):
    """One RMSprop update; ``state`` is the list of running mean squares (``None`` to start)."""
    if len(Qs) != len(grads):
        raise ValueError("shape mismatch between parameters and gradients")
    if config.learning_rate is None:
        raise ValueError("learning rate not set; use RunConfig.for_metric()")
    rho, lr, eps = config.rmsprop_decay, config.learning_rate, config.rmsprop_epsilon
    if state is None:
        state = [np.zeros_like(np.asarray(g, dtype=float)) for g in grads]
    new_Qs, new_state = [], []
    for Q, g, v in zip(Qs, grads, state):
        if np.shape(Q) != np.shape(g):
            raise ValueError("shape mismatch between parameters and gradients")
        v = rho * v + (1 - rho) * np.square(g)
        Q = Q - lr * g / (np.sqrt(v) + eps)
        if not np.all(np.isfinite(Q)):
            raise OptimizationError("non-finite parameters after RMSprop step")
        new_Qs.append(Q)
        new_state.append(v)
    return new_Qs, new_state


def initial_parameters(spec: ObjectiveSpec, rng: np.random.Generator) -> list[np.ndarray]:
    """Uniform(0, 1) draws on allowed edges, zero elsewhere."""
    return [rng.random((g.n, g.n)) * g.adjacency for g in spec.graphs]


def converged(history: Sequence[float], window: int, threshold: float) -> bool:
    """Mean relative change over the last ``window`` values is below ``threshold``."""
    if len(history) < window:
        return False
    h = np.asarray(history[-window:])
    older = h[:-1]
    rel = np.abs(np.diff(h)) / np.maximum(np.abs(older), 1e-12)
    return bool(rel.mean() < threshold)


def optimize_strategy(spec: ObjectiveSpec, config: RunConfig, seed: int,
                      init: Sequence[np.ndarray] | None = None) -> RunRecord:
    """Single local optimization from a random (or given) start."""
    config = config.for_metric(spec.metric)
    rng = np.random.default_rng(seed)
    Qs = [np.array(Q, dtype=float) for Q in init] if init is not None else initial_parameters(spec, rng)
    record = RunRecord(seed=seed)
    start = time.perf_counter()
    state = None
    try:
        Ps0 = [chain.parametrize(Q, g.adjacency) for Q, g in zip(Qs, spec.graphs)]
        spec = spec.resolve_horizon(Ps0)
        for it in range(config.max_iters):
            res = grad(spec, Qs)
            record.history.append(res.value)
            if config.progress_every and it % config.progress_every == 0:
                print(f"seed={seed} iter={it} objective={res.value:.6g} penalty={res.penalty:.3g}",
                      file=sys.stderr)
            if converged(record.history, config.stop_window, config.stop_threshold):
                break
            if it + 1 == config.max_iters:
                break
            Qs, state = rmsprop_step(Qs, res.grads, state, config)
    except (chain.DegenerateRowError, OptimizationError, NonFiniteError) as exc:
        record.failed = True
        record.message = str(exc)
    record.wall_time = time.perf_counter() - start
    record.Qs = Qs
    if not record.failed:
        record.Ps = [chain.parametrize(Q, g.adjacency) for Q, g in zip(Qs, spec.graphs)]
        record.metric, record.penalty = evaluate(spec, record.Ps, smoothing=1)
    return record


def select_best(records: Sequence[RunRecord], maximize: bool) -> int:
    """Best reported metric among runs whose penalty is at most 10x the median."""
    ok = [i for i, r in enumerate(records) if not r.failed]
    if not ok:
        raise OptimizationError("all runs failed")
    med = float(np.median([records[i].penalty for i in ok]))
    feasible = [i for i in ok if records[i].penalty <= 10 * med] or ok
    key = (lambda i: -records[i].metric) if maximize else (lambda i: records[i].metric)
    return min(feasible, key=key)


@dataclass(eq=False)
class MultiStartResult:
    records: list[RunRecord]
    best_index: int

    @property
    def best(self) -> RunRecord:
        return self.records[self.best_index]


def _run_one(args):
    spec, config, seed = args
    return optimize_strategy(spec, config, seed)


def multi_start(spec: ObjectiveSpec, config: RunConfig) -> MultiStartResult:
    """Run seeds ``config.seed .. config.seed + num_inits - 1`` and pick the best."""
    seeds = [config.seed + k for k in range(config.num_inits)]
    jobs = [(spec, config, s) for s in seeds]
    if config.workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(_run_one, jobs))
    else:
        records = [_run_one(j) for j in jobs]
    return MultiStartResult(records, select_best(records, spec.maximize))
