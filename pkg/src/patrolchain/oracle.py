"""Monte Carlo simulation of patrol walks, used to cross-check the exact recursions.

Walks are simulated in blocks of trials; block ``b`` of a batch draws from
``default_rng([seed, *stream, b])``, so results depend only on the seed,
the batch identity and the trial count, not on how blocks are scheduled. A transition ``i -> j`` takes ``W[i, j]``
periods and the arrival at ``j`` is credited when it completes.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

BLOCK = 100_000


@dataclass(frozen=True)
class SimConfig:
    trials: int = 100_000
    horizon: int = 50
    seed: int = 0
    weighted: bool = True  # elapsed time from W, else count transitions

    def __post_init__(self):
        if self.trials < 1 or self.horizon < 1:
            raise ValueError("trials and horizon must be >= 1")


def _blocks(trials: int, seed, stream=()):
    for b, start in enumerate(range(0, trials, BLOCK)):
        yield np.random.default_rng([seed, *stream, b]), min(BLOCK, trials - start)


def first_arrivals(P, W, start: int, cfg: SimConfig, targets=None, stream=()) -> np.ndarray:
    """First arrival time at every node for ``cfg.trials`` walks from ``start``.

    Returns an int array ``(trials, n)``; ``horizon + 1`` marks "not within
    the horizon". With ``targets`` given, walks stop once all targets are
    reached (other columns are then incomplete). ``stream`` extends the
    seed so that independent batches can share one ``cfg``.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    step_time = np.asarray(W, dtype=np.int64) if cfg.weighted else np.ones((n, n), np.int64)
    cum = np.cumsum(P, axis=1)
    cum[:, -1] = np.inf
    never = cfg.horizon + 1
    targets = None if targets is None else np.atleast_1d(targets)
    out = []
    for rng, m in _blocks(cfg.trials, cfg.seed, stream):
        first = np.full((m, n), never, dtype=np.int32)
        state = np.full(m, start, dtype=np.int64)
        elapsed = np.zeros(m, dtype=np.int64)
        live = np.arange(m)
        while live.size:
            s = state[live]
            u = rng.random(live.size)
            nxt = (u[:, None] >= cum[s]).sum(axis=1)
            elapsed[live] += step_time[s, nxt]
            ok = elapsed[live] <= cfg.horizon
            live, nxt = live[ok], nxt[ok]
            first[live, nxt] = np.minimum(first[live, nxt], elapsed[live])
            state[live] = nxt
            if targets is not None and live.size:
                done = (first[np.ix_(live, targets)] < never).all(axis=1)
                live = live[~done]
        out.append(first)
    return np.concatenate(out)


@dataclass(frozen=True, eq=False)
class HittingSample:
    """Empirical law of a first hitting time; ``freq[k - 1]`` estimates ``P[T = k]``."""

    freq: np.ndarray
    stderr: np.ndarray
    censored: float         # fraction not arrived within the horizon
    mean: float             # over uncensored trials
    mean_stderr: float
    trials: int


def _summarize(times: np.ndarray, horizon: int) -> HittingSample:
    trials = times.size
    counts = np.bincount(times, minlength=horizon + 2)[1:horizon + 1]
    freq = counts / trials
    hit = times[times <= horizon].astype(float)
    mean = hit.mean() if hit.size else float("nan")
    mse = hit.std(ddof=1) / np.sqrt(hit.size) if hit.size > 1 else float("nan")
    return HittingSample(freq, np.sqrt(freq * (1 - freq) / trials),
                         1.0 - hit.size / trials, float(mean), float(mse), trials)


def simulate_hitting(P, W, i: int, j: int, cfg: SimConfig) -> HittingSample:
    """Empirical distribution of ``T_ij`` (departing ``i``, first arrival at ``j``)."""
    times = first_arrivals(P, W, i, cfg, targets=[j], stream=(i, j))[:, j]
    return _summarize(times, cfg.horizon)


def simulate_hitting_all(P, W, i: int, cfg: SimConfig) -> list[HittingSample]:
    """Laws of ``T_ij`` for every target ``j`` from one batch of walks."""
    times = first_arrivals(P, W, i, cfg, stream=(i,))
    return [_summarize(times[:, j], cfg.horizon) for j in range(times.shape[1])]


@dataclass(frozen=True, eq=False)
class EmpiricalCapture:
    Lambda: np.ndarray      # rows: configurations, columns: attack nodes
    stderr: np.ndarray
    configs: list[tuple[int, ...]]


def empirical_capture(Ps, Ws, tau, cfg: SimConfig, rows=None) -> EmpiricalCapture:
    """Fraction of trials in which some robot reaches the attacked node within ``tau_j``.

    ``rows`` restricts the simulation to a subset of team configurations
    (tuples of start nodes); by default all ``n**R`` are simulated in
    lexicographic order. Each configuration gets fresh, independent walks.
    """
    if isinstance(Ps, np.ndarray) and Ps.ndim == 2:
        Ps, Ws = [Ps], [Ws]
    n = np.asarray(Ps[0]).shape[0]
    tau = np.broadcast_to(np.asarray(tau, dtype=np.int64), (n,))
    configs = list(rows) if rows is not None else list(itertools.product(range(n), repeat=len(Ps)))
    sim = SimConfig(cfg.trials, int(tau.max()), cfg.seed, cfg.weighted)
    Lam = np.empty((len(configs), n))
    for c, conf in enumerate(configs):
        caught = np.zeros((cfg.trials, n), dtype=bool)
        for r, (P, W, start) in enumerate(zip(Ps, Ws, conf)):
            caught |= first_arrivals(P, W, start, sim, stream=(c, r)) <= tau[None, :]
        Lam[c] = caught.mean(axis=0)
    return EmpiricalCapture(Lam, np.sqrt(Lam * (1 - Lam) / cfg.trials), configs)
