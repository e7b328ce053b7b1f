"""Exact gradients of :func:`~patrolchain.objectives.total_objective` and a
central-difference checker."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import autodiff as ad
from . import chain
from .objectives import REDUCIBLE_SENTINEL, ObjectiveSpec, _check_Qs, compose, total_objective


@dataclass(frozen=True, eq=False)
class GradientResult:
    value: float
    grads: list[np.ndarray]
    metric: float = float("nan")
    penalty: float = 0.0


def grad(spec: ObjectiveSpec, Qs) -> GradientResult:
    """Value and reverse-mode gradient of the total objective in ``Q`` space.

    Raises :class:`~patrolchain.autodiff.NonFiniteError` naming the
    primitive if any intermediate becomes NaN or Inf.
    """
    Qs = _check_Qs(spec, Qs)
    tape = ad.Tape()
    nodes = [tape.leaf(Q, "Q") for Q in Qs]
    try:
        comp = compose(spec, nodes)
    except chain.ReducibleChainError as exc:
        if spec.metric != "mht":
            raise
        warnings.warn(f"grad: {exc}; returning sentinel", RuntimeWarning)
        return GradientResult(REDUCIBLE_SENTINEL, [np.zeros_like(Q) for Q in Qs],
                              REDUCIBLE_SENTINEL, 0.0)
    grads = tape.gradient(comp.objective, nodes)
    pen = 0.0 if comp.penalty is None else float(comp.penalty.value)
    return GradientResult(float(comp.objective.value), grads, float(comp.metric.value), pen)


def relative_error(a, b) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    return np.abs(a - b) / np.maximum(1e-8, np.maximum(np.abs(a), np.abs(b)))


def fd_gradient(func: Callable[[list[np.ndarray]], float], Qs, coords, h: float) -> np.ndarray:
    """Central differences of ``func`` at the given ``(robot, i, j)`` coordinates."""
    out = np.empty(len(coords))
    for c, (r, i, j) in enumerate(coords):
        plus = [Q.copy() for Q in Qs]
        minus = [Q.copy() for Q in Qs]
        plus[r][i, j] += h
        minus[r][i, j] -= h
        out[c] = (func(plus) - func(minus)) / (2 * h)
    return out


def fd_check(spec: ObjectiveSpec, Qs, h: float = 1e-5, max_coords: int | None = None,
             rng: np.random.Generator | None = None, func=None, grad_func=None) -> float:
    """Max relative error between :func:`grad` and central differences.

    Every coordinate is checked unless ``max_coords`` is given, in which
    case a random subset of at least 50 coordinates is drawn. ``func`` and
    ``grad_func`` override the objective (used to test the checker itself).
    """
    if h <= 0:
        raise ValueError("step must be positive")
    Qs = _check_Qs(spec, Qs) if spec is not None else [np.asarray(Q, float) for Q in Qs]
    func = func or (lambda q: total_objective(spec, q))
    analytic = grad_func(Qs) if grad_func else grad(spec, Qs).grads
    coords = [(r, i, j) for r, Q in enumerate(Qs) for i in range(Q.shape[0]) for j in range(Q.shape[1])]
    if max_coords is not None and len(coords) > max(50, max_coords):
        rng = rng or np.random.default_rng(0)
        pick = rng.choice(len(coords), size=max(50, max_coords), replace=False)
        coords = [coords[p] for p in sorted(pick)]
    numeric = fd_gradient(func, Qs, coords, h)
    exact = np.array([analytic[r][i, j] for r, i, j in coords])
    return float(relative_error(exact, numeric).max())
