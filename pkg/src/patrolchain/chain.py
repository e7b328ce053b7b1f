r"""Markov-chain kernels for patrol strategies.

All functions take plain arrays and are pure. Hitting-time tensors are
stored 0-based along the first axis: ``F[k - 1]`` holds the matrix
:math:`F_k` with :math:`F_k(i, j) = \mathbb{P}[T_{ij} = k]`.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy.sparse.csgraph import connected_components


class DegenerateRowError(ValueError):
    """A row of ``|Q o A|`` has (numerically) zero mass."""


class ReducibleChainError(ValueError):
    """The chain is not irreducible, so the requested quantity is not unique or finite."""


DEGENERATE_ROW_TOL = 1e-30


def parametrize(Q, A) -> np.ndarray:
    """Map an unconstrained matrix to a transition matrix on the graph ``A``.

    Masks by the adjacency, takes absolute values and normalizes rows:
    ``P = rownormalize(|Q o A|)``.
    """
    Q = np.asarray(Q, dtype=float)
    if not np.all(np.isfinite(Q)):
        raise ValueError("parameter matrix has non-finite entries")
    X = np.abs(Q * A)
    s = X.sum(axis=1, keepdims=True)
    bad = np.flatnonzero(s[:, 0] < DEGENERATE_ROW_TOL)
    if bad.size:
        raise DegenerateRowError(f"degenerate row(s) {bad.tolist()} in parametrization")
    return X / s


def is_irreducible(P) -> bool:
    ncomp, _ = connected_components(np.asarray(P) > 0, directed=True, connection="strong")
    return ncomp == 1


@dataclass(frozen=True, eq=False)
class StationaryDistribution:
    pi: np.ndarray
    residual: float  # ||pi^T P - pi^T||_2


def _residual(pi, P) -> float:
    return float(np.linalg.norm(pi @ P - pi))


def power_iterates(P, max_iter: int) -> np.ndarray:
    """All iterates of sum-normalized power iteration from the uniform vector.

    Returns an array of shape ``(max_iter + 1, n)``; row 0 is the start.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    out = np.empty((max_iter + 1, n))
    pi = np.full(n, 1.0 / n)
    out[0] = pi
    for t in range(max_iter):
        u = pi @ P
        pi = u / u.sum()
        out[t + 1] = pi
    return out


def stationary_power(P, max_iter: int = 100) -> StationaryDistribution:
    """Stationary distribution by exactly ``max_iter`` power iterations.

    Non-convergence is not an error; inspect ``residual``.
    """
    pi = power_iterates(P, max_iter)[-1]
    return StationaryDistribution(pi, _residual(pi, P))


def stationary_direct(P) -> StationaryDistribution:
    """Stationary distribution of an irreducible chain by a linear solve."""
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    if not is_irreducible(P):
        raise ReducibleChainError("reducible chain: stationary distribution is not unique")
    # pi^T (P - I) = 0 with the last equation replaced by pi^T 1 = 1
    A = (P - np.eye(n)).T
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        raise ReducibleChainError("reducible chain: singular stationary system") from None
    return StationaryDistribution(pi, _residual(pi, P))


@dataclass(frozen=True, eq=False)
class HittingProbTensor:
    """First-hitting-time probabilities ``F[k - 1] = F_k`` for ``k = 1..K``."""

    F: np.ndarray
    heterogeneous: bool

    @property
    def horizon(self) -> int:
        return self.F.shape[0]

    def at(self, k: int) -> np.ndarray:
        """``F_k`` with 1-based ``k``."""
        if not 1 <= k <= self.horizon:
            raise IndexError(k)
        return self.F[k - 1]


def _travel_times(P, W) -> np.ndarray:
    W = np.asarray(W)
    if np.any((W < 1) & (np.asarray(P) > 0)):
        raise ValueError("travel times must be >= 1 wherever P > 0")
    if not np.all(W == np.round(W)):
        raise ValueError("travel times must be integers")
    return np.where(W >= 1, W, 1).astype(np.int64)


def weight_classes(P, W) -> list[tuple[int, np.ndarray, np.ndarray]]:
    """Split ``P`` by travel time: ``[(w, mask_w, P o mask_w), ...]``."""
    Wi = _travel_times(P, W)
    out = []
    for w in np.unique(Wi):
        mask = Wi == w
        out.append((int(w), mask, np.where(mask, P, 0.0)))
    return out


def iter_hitting_probs(P, W, K: int) -> Iterator[np.ndarray]:
    r"""Yield :math:`F_1, \dots, F_K` for travel times ``W``.

    .. math::
        F_k(i,l) = P(i,l)\,[w_{il} = k] + \sum_m P(i,m)\,[m \ne l]\,F_{k-w_{im}}(m,l)

    with :math:`F_k = 0` for :math:`k \le 0`. Only the last ``max(W)``
    off-diagonal slices are retained.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    Wi = _travel_times(P, W)
    classes = weight_classes(P, Wi)
    off = 1.0 - np.eye(n)
    wmax = max(w for w, _, _ in classes)
    recent: deque[np.ndarray] = deque(maxlen=wmax)  # recent[-d] holds G_{k-d}
    for k in range(1, K + 1):
        Fk = np.where(Wi == k, P, 0.0)
        for w, _, Pw in classes:
            if w < k and w <= len(recent):
                Fk += Pw @ recent[-w]
        recent.append(Fk * off)
        yield Fk


def hitting_probs_heterogeneous(P, W, K: int) -> HittingProbTensor:
    if K < 1:
        raise ValueError("horizon must be >= 1")
    F = np.stack(list(iter_hitting_probs(P, W, K)))
    return HittingProbTensor(F, heterogeneous=True)


def hitting_probs_homogeneous(P, K: int) -> HittingProbTensor:
    r"""Unit travel times: :math:`F_1 = P`, :math:`F_k = P\,(F_{k-1} \circ (11^T - I))`."""
    if K < 1:
        raise ValueError("horizon must be >= 1")
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    off = 1.0 - np.eye(n)
    F = np.empty((K, n, n))
    F[0] = P
    for k in range(1, K):
        F[k] = P @ (F[k - 1] * off)
    return HittingProbTensor(F, heterogeneous=False)


def hitting_probs(P, W, K: int) -> HittingProbTensor:
    """Dispatch on whether every used travel time is 1."""
    P = np.asarray(P, dtype=float)
    if np.all(np.asarray(W)[P > 0] == 1):
        return hitting_probs_homogeneous(P, K)
    return hitting_probs_heterogeneous(P, W, K)


def first_passage_systems(P) -> np.ndarray:
    """Stack of matrices ``A_j = I - P`` with column ``j`` replaced by ``e_j``.

    ``A_j m = b`` is the first-passage system for target ``j``: arriving at
    ``j`` ends the walk, so column ``j`` of ``P`` drops out.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    A = np.broadcast_to(np.eye(n) - P, (n, n, n)).copy()
    j = np.arange(n)
    A[j, :, j] = np.eye(n)
    return A


def _mean_hitting(P, b) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    if not is_irreducible(P):
        raise ReducibleChainError("reducible chain: some hitting times are infinite")
    A = first_passage_systems(P)
    rhs = np.broadcast_to(b, (n, n))[..., None]
    try:
        sol = np.linalg.solve(A, rhs)[..., 0]
    except np.linalg.LinAlgError:
        raise ReducibleChainError("reducible chain: singular first-passage system") from None
    return sol.T


def mean_hitting_hops(P) -> np.ndarray:
    """Expected number of transitions ``M(i, j) = E[T_ij]`` (returns on the diagonal)."""
    n = np.asarray(P).shape[0]
    return _mean_hitting(P, np.ones(n))


def mean_hitting_weighted(P, W) -> np.ndarray:
    """Expected elapsed travel time from departing ``i`` until first arrival at ``j``."""
    P = np.asarray(P, dtype=float)
    W = np.asarray(W)
    if np.all(W[P > 0] == 1):
        return mean_hitting_hops(P)
    return _mean_hitting(P, (P * _travel_times(P, W)).sum(axis=1))
