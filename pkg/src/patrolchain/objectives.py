"""Surveillance metrics for Markov-chain patrol strategies.

Four metrics are provided:

* ``mht``: weighted mean hitting time (minimize),
* ``rte``: truncated return-time entropy (maximize),
* ``sg``:  worst-case capture probability against a stationary attacker (maximize),
* ``sgm``: the same game for a team of independent robots (maximize).

The plain-array functions (:func:`j_mht`, :func:`j_sg`, ...) evaluate a
metric for given transition matrices. :func:`total_objective` composes the
parametrization, a metric and the stationary-distribution penalty into one
scalar to minimize; :mod:`patrolchain.gradients` differentiates the same
composition.
"""
from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autodiff as ad
from . import chain
from .graph import PatrolGraph, validate_distribution

METRICS = ("mht", "rte", "sg", "sgm")
MAXIMIZE = {"mht": False, "rte": True, "sg": True, "sgm": True}
DEFAULT_POWER_ITERS = 100
# Node weights in the mean-hitting-time and entropy metrics. Weighting the
# mean hitting time by the chain's own stationary distribution lets the
# optimizer drift toward nearly absorbing chains, so it uses the target.
DEFAULT_PI_MODE = {"mht": "target", "rte": "computed"}
REDUCIBLE_SENTINEL = 1e12


def rte_horizon(w_max: int, pi_min: float, eta: float) -> int:
    """Truncation horizon ``ceil(w_max / (eta * pi_min)) - 1``."""
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    if pi_min <= 0:
        raise ValueError("truncated entropy needs a strictly positive distribution")
    return max(1, math.ceil(w_max / (eta * pi_min)) - 1)


def as_tau(tau, n: int) -> np.ndarray:
    """Broadcast a scalar or vector of attack durations to ``n`` positive integers."""
    arr = np.asarray(tau)
    if arr.ndim == 0:
        arr = np.full(n, arr)
    if arr.shape != (n,):
        raise ValueError(f"tau has shape {arr.shape}, expected ({n},)")
    if not np.all(arr == np.round(arr)) or np.any(arr < 1):
        raise ValueError("attack durations must be positive integers")
    return arr.astype(np.int64)


@dataclass(frozen=True, eq=False)
class ObjectiveSpec:
    """What to optimize.

    ``graphs`` holds one graph per robot (a single graph for ``mht``,
    ``rte`` and ``sg``). ``pi`` is the target stationary distribution used
    by the penalty, ``None`` to drop the penalty. ``pi_mode`` selects the
    node weights of ``mht``/``rte``: ``"target"`` uses ``pi``, ``"computed"``
    the chain's power-iteration stationary distribution; ``None`` picks the
    per-metric default (falling back to ``"computed"`` without a target).
    ``smoothing`` is the number of lowest capture probabilities averaged
    during optimization; reported metrics always use 1. ``horizon`` fixes
    the entropy truncation; it is derived from ``eta`` when left unset.
    """

    metric: str
    graphs: tuple[PatrolGraph, ...]
    pi: np.ndarray | None = None
    alpha: float = 1.0
    tau: np.ndarray | None = None
    eta: float = 0.1
    smoothing: int = 1
    pi_mode: str | None = None
    power_iters: int = DEFAULT_POWER_ITERS
    horizon: int | None = None

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}; expected one of {METRICS}")
        graphs = (self.graphs,) if isinstance(self.graphs, PatrolGraph) else tuple(self.graphs)
        if not graphs:
            raise ValueError("at least one graph is required")
        n = graphs[0].n
        if any(g.n != n for g in graphs):
            raise ValueError("dimension mismatch: robot graphs must share the node set")
        if self.metric != "sgm" and len(graphs) != 1:
            raise ValueError(f"metric {self.metric!r} takes a single graph")
        object.__setattr__(self, "graphs", graphs)
        if self.pi is not None:
            object.__setattr__(self, "pi", validate_distribution(self.pi, n))
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        if self.smoothing < 1:
            raise ValueError("smoothing must be >= 1")
        if self.pi_mode is None:
            mode = DEFAULT_PI_MODE.get(self.metric, "computed")
            object.__setattr__(self, "pi_mode", "computed" if self.pi is None else mode)
        if self.pi_mode not in ("computed", "target"):
            raise ValueError("pi_mode must be 'computed' or 'target'")
        if self.pi_mode == "target" and self.pi is None:
            raise ValueError("pi_mode='target' needs a target distribution")
        if self.metric in ("sg", "sgm"):
            if self.tau is None:
                raise ValueError(f"metric {self.metric!r} needs attack durations tau")
            object.__setattr__(self, "tau", as_tau(self.tau, n))

    @property
    def n(self) -> int:
        return self.graphs[0].n

    @property
    def robots(self) -> int:
        return len(self.graphs)

    @property
    def maximize(self) -> bool:
        return MAXIMIZE[self.metric]

    def replace(self, **changes) -> "ObjectiveSpec":
        return dataclasses.replace(self, **changes)

    def resolve_horizon(self, Ps: Sequence[np.ndarray] | None = None) -> "ObjectiveSpec":
        """Freeze the entropy horizon, using the target or else the chain at ``Ps``."""
        if self.metric != "rte" or self.horizon is not None:
            return self
        if self.pi is not None:
            pi_min = self.pi.min()
        elif Ps is not None:
            pi_min = chain.stationary_power(Ps[0], self.power_iters).pi.min()
        else:
            raise ValueError("entropy horizon needs a target distribution or a strategy")
        return self.replace(horizon=rte_horizon(self.graphs[0].max_weight, pi_min, self.eta))


# -- compositions on the tape -------------------------------------------------

def _weights_pi(P, pi, power_iters):
    return ad.power_iteration(P, power_iters) if pi is None else pi


def _mht(P, W, pi):
    hop_time = ad.total(ad.matmul(pi, ad.mul(P, W)))
    kemeny = ad.matmul(ad.matmul(pi, ad.mean_hitting(P)), pi)
    return ad.mul(hop_time, kemeny)


def _rte(P, W, pi, K):
    return ad.matmul(pi, ad.diag_entropy(ad.hitting_probs(P, W, K)))


def _capture(P, W, tau):
    return ad.capture(ad.hitting_probs(P, W, int(tau.max())), tau)


def _penalty_single(P, pi_target, alpha):
    pi_target = np.asarray(pi_target, dtype=float)
    return ad.mul(ad.sum_squares(ad.sub(ad.matmul(pi_target, P), pi_target)), alpha)


def _penalty_multi(Ps, pi_target, alpha, power_iters):
    pis = [ad.power_iteration(P, power_iters) for P in Ps]
    return ad.mul(ad.sum_squares(ad.sub(ad.mean_of(pis), pi_target)), alpha)


def _metric(spec: ObjectiveSpec, Ps, smoothing: int):
    g0 = spec.graphs[0]
    if spec.metric == "mht":
        pi = spec.pi if spec.pi_mode == "target" else None
        return _mht(Ps[0], g0.weights, _weights_pi(Ps[0], pi, spec.power_iters))
    if spec.metric == "rte":
        if spec.horizon is None:
            raise ValueError("entropy horizon not resolved; call spec.resolve_horizon()")
        pi = spec.pi if spec.pi_mode == "target" else None
        return _rte(Ps[0], g0.weights, _weights_pi(Ps[0], pi, spec.power_iters), spec.horizon)
    if spec.metric == "sg":
        return ad.lowest_mean(_capture(Ps[0], g0.weights, spec.tau), smoothing)
    Cs = [_capture(P, g.weights, spec.tau) for P, g in zip(Ps, spec.graphs)]
    return ad.lowest_mean(ad.team_capture(Cs), smoothing)


def _penalty(spec: ObjectiveSpec, Ps):
    if spec.pi is None:
        return None
    if spec.metric == "sgm":
        return _penalty_multi(Ps, spec.pi, spec.alpha, spec.power_iters)
    return _penalty_single(Ps[0], spec.pi, spec.alpha)


@dataclass(frozen=True)
class Composition:
    objective: "ad.Node"
    metric: "ad.Node"
    penalty: "ad.Node | None"


def compose(spec: ObjectiveSpec, Qs: Sequence["ad.Node"], smoothing: int | None = None) -> Composition:
    """Record ``Q -> P -> (+/- metric) + penalty`` on the tape of ``Qs``."""
    if len(Qs) != spec.robots:
        raise ValueError(f"expected {spec.robots} parameter matrices, got {len(Qs)}")
    Ps = [ad.parametrize(Q, g.adjacency) for Q, g in zip(Qs, spec.graphs)]
    s = spec.smoothing if smoothing is None else smoothing
    metric = _metric(spec, Ps, s)
    signed = ad.neg(metric) if spec.maximize else metric
    pen = _penalty(spec, Ps)
    objective = signed if pen is None else ad.add(signed, pen)
    return Composition(objective, metric, pen)


def _check_Qs(spec: ObjectiveSpec, Qs) -> list[np.ndarray]:
    if isinstance(Qs, np.ndarray) and Qs.ndim == 2:
        Qs = [Qs]
    Qs = [np.asarray(Q, dtype=float) for Q in Qs]
    if len(Qs) != spec.robots or any(Q.shape != (spec.n, spec.n) for Q in Qs):
        raise ValueError("dimension mismatch between parameters and graphs")
    return Qs


def total_objective(spec: ObjectiveSpec, Qs) -> float:
    """Scalar to minimize: the metric (negated if maximized) plus the penalty."""
    tape = ad.Tape()
    nodes = [tape.leaf(Q, "Q") for Q in _check_Qs(spec, Qs)]
    return float(compose(spec, nodes).objective.value)


def evaluate(spec: ObjectiveSpec, Ps: Sequence[np.ndarray], smoothing: int = 1) -> tuple[float, float]:
    """Metric (at the given smoothing) and penalty for transition matrices ``Ps``."""
    tape = ad.Tape()
    nodes = [tape.leaf(P, "P") for P in Ps]
    metric = _metric(spec, nodes, smoothing)
    pen = _penalty(spec, nodes)
    return float(metric.value), 0.0 if pen is None else float(pen.value)


# -- plain evaluation ---------------------------------------------------------

def _leaf(P):
    tape = ad.Tape()
    return tape.leaf(P, "P")


def j_mht(P, W, pi=None, power_iters: int = DEFAULT_POWER_ITERS) -> float:
    """Weighted mean hitting time ``(pi^T (P o W) 1) * (pi^T M pi)``.

    ``M`` counts transitions. ``pi=None`` uses the chain's own stationary
    distribution from power iteration. A reducible chain yields a large
    finite sentinel and a warning instead of an exception.
    """
    Pn = _leaf(P)
    try:
        return float(_mht(Pn, np.asarray(W, dtype=float), _weights_pi(Pn, pi, power_iters)).value)
    except chain.ReducibleChainError as exc:
        warnings.warn(f"j_mht: {exc}; returning sentinel {REDUCIBLE_SENTINEL:g}", RuntimeWarning)
        return REDUCIBLE_SENTINEL


def j_rte(P, W, pi=None, eta: float = 0.1, horizon: int | None = None,
          power_iters: int = DEFAULT_POWER_ITERS) -> float:
    """Truncated return-time entropy in nats.

    ``pi=None`` weights nodes by the chain's stationary distribution; the
    truncation horizon defaults to ``ceil(w_max / (eta * pi_min)) - 1``
    with ``pi_min`` taken from the weights actually used.
    """
    Pn = _leaf(P)
    W = np.asarray(W)
    weights = _weights_pi(Pn, pi, power_iters)
    if horizon is None:
        wmax = int(W[np.asarray(P) > 0].max())
        horizon = rte_horizon(wmax, float(ad.value(weights).min()), eta)
    return float(_rte(Pn, W, weights, horizon).value)


def capture_matrix(F, tau) -> np.ndarray:
    """``Lambda(i, j) = sum_{k <= tau_j} F_k(i, j)`` from a hitting tensor or ``(K, n, n)`` array."""
    F = F.F if isinstance(F, chain.HittingProbTensor) else np.asarray(F, dtype=float)
    tau = np.asarray(tau, dtype=np.int64)
    K, n, _ = F.shape
    if tau.max() > K:
        raise ValueError(f"horizon too small: {K} < max tau {tau.max()}")
    cum = np.concatenate([np.zeros((1, n, n)), np.cumsum(F, axis=0)])
    return cum[tau, :, np.arange(n)].T


def j_sg(P, W, tau, s: int = 1) -> float:
    """Minimum capture probability (or mean of the ``s`` smallest)."""
    tau = as_tau(tau, np.asarray(P).shape[0])
    return float(ad.lowest_mean(_capture(_leaf(P), W, tau), s).value)


def team_capture_matrix(Ps, Ws, tau) -> np.ndarray:
    """Tall ``n**R x n`` capture matrix of a robot team."""
    if len(Ps) != len(Ws) or not Ps:
        raise ValueError("dimension mismatch: one weight matrix per robot")
    n = np.asarray(Ps[0]).shape[0]
    if any(np.asarray(P).shape != (n, n) for P in Ps):
        raise ValueError("dimension mismatch: robots must share the node set")
    tau = as_tau(tau, n)
    tape = ad.Tape()
    Cs = [_capture(tape.leaf(P), W, tau) for P, W in zip(Ps, Ws)]
    return ad.team_capture(Cs).value


def j_sgm(Ps, Ws, tau, s: int = 1) -> float:
    """Team version of :func:`j_sg`; equals it for a single robot."""
    Lam = team_capture_matrix(Ps, Ws, tau)
    return float(np.sort(Lam, axis=None)[:s].mean())


def penalty_single(P, pi_target, alpha: float) -> float:
    """``alpha * ||pi^T P - pi^T||_2^2``."""
    return float(_penalty_single(_leaf(P), pi_target, alpha).value)


def penalty_multi(Ps, pi_target, alpha: float, power_iters: int = DEFAULT_POWER_ITERS) -> float:
    """``alpha * ||mean_r pi_r - pi||_2^2`` with each ``pi_r`` from power iteration."""
    tape = ad.Tape()
    nodes = [tape.leaf(P) for P in Ps]
    return float(_penalty_multi(nodes, np.asarray(pi_target, float), alpha, power_iters).value)
