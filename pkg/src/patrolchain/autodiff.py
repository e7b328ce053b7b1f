"""A small reverse-mode tape over matrix-level primitives.

Every primitive takes :class:`Node` operands (or plain arrays, treated as
constants), computes its value with numpy and records a vector-Jacobian
product. :meth:`Tape.gradient` sweeps the records in reverse.

The objectives in this package are shallow, fixed-shape graphs, so the
tape stores whole matrices per node rather than individual scalars. The
recursions with many steps (hitting probabilities, power iteration) are
single fused primitives with hand-written adjoints.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from . import chain


class NonFiniteError(FloatingPointError):
    """A primitive produced NaN or Inf."""

    def __init__(self, primitive: str, phase: str = "forward"):
        super().__init__(f"non-finite value in {phase} pass of primitive '{primitive}'")
        self.primitive = primitive
        self.phase = phase


class Node:
    __slots__ = ("tape", "index", "value", "name", "parents", "vjp")

    def __init__(self, tape, index, value, name, parents, vjp):
        self.tape = tape
        self.index = index
        self.value = value
        self.name = name
        self.parents = parents
        self.vjp = vjp

    @property
    def shape(self):
        return np.shape(self.value)

    def __repr__(self):
        return f"Node({self.name}, shape={self.shape})"


class Tape:
    def __init__(self):
        self.nodes: list[Node] = []

    def leaf(self, value, name: str = "input") -> Node:
        return self._push(np.array(value, dtype=float), name, (), None)

    def _push(self, value, name, parents, vjp) -> Node:
        if not np.all(np.isfinite(value)):
            raise NonFiniteError(name)
        node = Node(self, len(self.nodes), value, name, parents, vjp)
        self.nodes.append(node)
        return node

    def gradient(self, out: Node, wrt: Sequence[Node]) -> list[np.ndarray]:
        """Gradient of the scalar ``out`` with respect to each node in ``wrt``."""
        if np.size(out.value) != 1:
            raise ValueError("gradient requires a scalar output")
        grads: list = [None] * (out.index + 1)
        grads[out.index] = np.ones_like(out.value)
        for node in reversed(self.nodes[: out.index + 1]):
            g = grads[node.index]
            if g is None or node.vjp is None:
                continue
            for parent, gp in zip(node.parents, node.vjp(g)):
                if gp is None:
                    continue
                if not np.all(np.isfinite(gp)):
                    raise NonFiniteError(node.name, "backward")
                if grads[parent.index] is None:
                    grads[parent.index] = np.array(gp, dtype=float)
                else:
                    grads[parent.index] = grads[parent.index] + gp
        return [np.zeros_like(w.value) if grads[w.index] is None else grads[w.index]
                for w in wrt]


def value(x):
    return x.value if isinstance(x, Node) else np.asarray(x, dtype=float)


def _record(name: str, out, operands: Sequence, vjp: Callable) -> Node:
    """Push ``out`` with parents drawn from the Node operands.

    ``vjp(g)`` returns one gradient per operand; entries for constants are dropped.
    """
    which = [i for i, x in enumerate(operands) if isinstance(x, Node)]
    if not which:
        raise TypeError(f"{name}: at least one operand must be a Node")
    tape = operands[which[0]].tape
    parents = tuple(operands[i] for i in which)

    def node_vjp(g):
        gs = vjp(g)
        return [gs[i] for i in which]

    return tape._push(np.asarray(out, dtype=float), name, parents, node_vjp)


def _unbroadcast(g, shape):
    g = np.asarray(g)
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, s in enumerate(shape):
        if s == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# -- elementwise and linear algebra ------------------------------------------

def add(a, b) -> Node:
    va, vb = value(a), value(b)
    return _record("add", va + vb, (a, b),
                   lambda g: (_unbroadcast(g, va.shape), _unbroadcast(g, vb.shape)))


def sub(a, b) -> Node:
    va, vb = value(a), value(b)
    return _record("sub", va - vb, (a, b),
                   lambda g: (_unbroadcast(g, va.shape), -_unbroadcast(g, vb.shape)))


def mul(a, b) -> Node:
    va, vb = value(a), value(b)
    return _record("mul", va * vb, (a, b),
                   lambda g: (_unbroadcast(g * vb, va.shape), _unbroadcast(g * va, vb.shape)))


def neg(a) -> Node:
    return _record("neg", -value(a), (a,), lambda g: (-g,))


def matmul(a, b) -> Node:
    """Matrix product for 1-D and 2-D operands (``pi @ P``, ``M @ pi``, ...)."""
    va, vb = value(a), value(b)

    def vjp(g):
        if va.ndim == 1 and vb.ndim == 1:
            return g * vb, g * va
        if va.ndim == 1:
            return vb @ g, np.outer(va, g)
        if vb.ndim == 1:
            return np.outer(g, vb), va.T @ g
        return g @ vb.T, va.T @ g

    return _record("matmul", va @ vb, (a, b), vjp)


def total(a) -> Node:
    va = value(a)
    return _record("sum", va.sum(), (a,), lambda g: (np.full(va.shape, float(g)),))


def sum_squares(a) -> Node:
    va = value(a)
    return _record("sum_squares", np.dot(va.ravel(), va.ravel()), (a,),
                   lambda g: (2.0 * g * va,))


def mean_of(nodes: Sequence) -> Node:
    acc = nodes[0]
    for x in nodes[1:]:
        acc = add(acc, x)
    return mul(acc, 1.0 / len(nodes))


# -- parametrization ---------------------------------------------------------

def mask_abs(Q, A) -> Node:
    """``|Q o A|``; the subgradient at 0 is taken from the positive branch."""
    vq = value(Q)
    A = np.asarray(A, dtype=float)
    sign = np.where(vq < 0, -1.0, 1.0) * A
    return _record("mask_abs", np.abs(vq * A), (Q,), lambda g: (g * sign,))


def row_normalize(X) -> Node:
    vx = value(X)
    s = vx.sum(axis=1, keepdims=True)
    bad = np.flatnonzero(s[:, 0] < chain.DEGENERATE_ROW_TOL)
    if bad.size:
        raise chain.DegenerateRowError(f"degenerate row(s) {bad.tolist()} in parametrization")
    y = vx / s

    def vjp(g):
        return ((g - (g * y).sum(axis=1, keepdims=True)) / s,)

    return _record("row_normalize", y, (X,), vjp)


def parametrize(Q, A) -> Node:
    return row_normalize(mask_abs(Q, A))


# -- Markov-chain primitives -------------------------------------------------

def power_iteration(P, iters: int) -> Node:
    """Unrolled sum-normalized power iteration from the uniform vector."""
    vp = value(P)
    pis = chain.power_iterates(vp, iters)

    def vjp(g):
        gP = np.zeros_like(vp)
        for t in range(iters, 0, -1):
            prev = pis[t - 1]
            s = (prev @ vp).sum()
            gu = (g - g @ pis[t]) / s
            gP += np.outer(prev, gu)
            g = vp @ gu
        return (gP,)

    return _record("power_iteration", pis[-1], (P,), vjp)


def mean_hitting(P) -> Node:
    """``M(i, j) = E[T_ij]`` in hops, differentiable in ``P``."""
    vp = value(P)
    M = chain.mean_hitting_hops(vp)
    n = vp.shape[0]

    def vjp(g):
        A = chain.first_passage_systems(vp)
        lam = np.linalg.solve(np.swapaxes(A, 1, 2), g.T[..., None])[..., 0]
        Mt = M.T.copy()  # row j is the solution column for target j
        Mt[np.arange(n), np.arange(n)] = 0.0
        return (lam.T @ Mt,)

    return _record("mean_hitting", M, (P,), vjp)


def hitting_probs(P, W, K: int) -> Node:
    """Stack ``(K, n, n)`` of first-hitting probabilities for travel times ``W``."""
    vp = value(P)
    n = vp.shape[0]
    F = chain.hitting_probs_heterogeneous(vp, W, K).F
    Wi = chain._travel_times(vp, W)
    classes = chain.weight_classes(vp, Wi)
    off = 1.0 - np.eye(n)

    def vjp(gF):
        a = np.array(gF, dtype=float)
        G = F * off
        gP = np.zeros_like(vp)
        for k in range(K, 0, -1):
            ak = a[k - 1]
            if not ak.any():
                continue
            gP += np.where(Wi == k, ak, 0.0)
            for w, mask, Pw in classes:
                t = k - w
                if t >= 1:
                    gP += mask * (ak @ G[t - 1].T)
                    a[t - 1] += (Pw.T @ ak) * off
        return (gP,)

    return _record("hitting_probs", F, (P,), vjp)


def capture(F, tau) -> Node:
    """``Lambda(i, j) = sum_{k <= tau_j} F_k(i, j)``."""
    vF = value(F)
    tau = np.asarray(tau, dtype=np.int64)
    K, n, _ = vF.shape
    if tau.max() > K:
        raise ValueError(f"horizon too small: {K} < max tau {tau.max()}")
    cum = np.concatenate([np.zeros((1, n, n)), np.cumsum(vF, axis=0)])
    Lam = cum[tau, :, np.arange(n)].T
    sel = (np.arange(1, K + 1)[:, None] <= tau[None, :])[:, None, :]

    return _record("capture", Lam, (F,), lambda g: (sel * g[None, :, :],))


def team_capture(Cs: Sequence) -> Node:
    """Tall capture matrix ``1 - prod_r (1 - C_r(i_r, j))``.

    Rows are team configurations ``(i_1, ..., i_R)`` in lexicographic order
    (the last robot's start varies fastest).
    """
    Sv = [1.0 - value(C) for C in Cs]
    R = len(Sv)
    n = Sv[0].shape[0]

    def expand(r):
        shape = [1] * R + [n]
        shape[r] = n
        return Sv[r].reshape(shape)

    prod = expand(0)
    for r in range(1, R):
        prod = prod * expand(r)
    Lam = (1.0 - np.broadcast_to(prod, (n,) * R + (n,))).reshape(n ** R, n)

    def vjp(g):
        g = g.reshape((n,) * R + (n,))
        out = []
        for r in range(R):
            others = np.ones((1,) * R + (n,))
            for q in range(R):
                if q != r:
                    others = others * expand(q)
            contrib = g * others  # dLam/dC_r = prod of the other (1 - C_q)
            axes = tuple(q for q in range(R) if q != r)
            out.append(contrib.sum(axis=axes) if axes else contrib)
        return out

    return _record("team_capture", Lam, tuple(Cs), vjp)


def lowest_mean(X, s: int) -> Node:
    """Mean of the ``s`` smallest entries; ties resolve to the lowest flat index."""
    vx = value(X)
    flat = vx.ravel()
    if not 1 <= s <= flat.size:
        raise ValueError(f"smoothing count {s} outside [1, {flat.size}]")
    idx = np.argsort(flat, kind="stable")[:s]

    def vjp(g):
        gx = np.zeros(flat.size)
        gx[idx] = g / s
        return (gx.reshape(vx.shape),)

    return _record("lowest_mean", flat[idx].mean(), (X,), vjp)


LOG_FLOOR = 1e-300


def diag_entropy(F) -> Node:
    """``h_i = -sum_k F_k(i,i) log F_k(i,i)`` with ``0 log 0 = 0``."""
    vF = value(F)
    K, n, _ = vF.shape
    d = vF[:, np.arange(n), np.arange(n)]
    live = d > LOG_FLOOR
    logd = np.log(np.where(live, d, 1.0))
    h = -(d * logd).sum(axis=0)

    def vjp(g):
        gF = np.zeros_like(vF)
        gF[:, np.arange(n), np.arange(n)] = np.where(live, -(logd + 1.0), 0.0) * g[None, :]
        return (gF,)

    return _record("diag_entropy", h, (F,), vjp)
