"""Patrol environments: weighted directed graphs with integer travel times.

Nodes are indexed from 0 internally. Files and the command line refer to
nodes by label; the bundled San Francisco graph uses the labels "0".."11",
so label ``"k"`` is node index ``k`` (1-based row ``k + 1`` of a printed
travel-time table).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components


class GraphValidationError(ValueError):
    """Raised when a graph or distribution violates its invariants."""


@dataclass(frozen=True, eq=False)
class PatrolGraph:
    """Directed patrol graph.

    Attributes
    ----------
    adjacency : ndarray, shape=(n, n)
        Binary matrix, ``adjacency[i, j] == 1`` iff the path i -> j exists.
    weights : ndarray, shape=(n, n)
        Integer travel times. Only entries on edges are meaningful.
    labels : tuple of str
        Human-readable node names.
    """

    adjacency: np.ndarray
    weights: np.ndarray
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        A = np.asarray(self.adjacency)
        W = np.asarray(self.weights)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or W.shape != A.shape:
            raise GraphValidationError(
                f"asymmetric sizes: adjacency {A.shape}, weights {W.shape}")
        n = A.shape[0]
        if n == 0:
            raise GraphValidationError("asymmetric sizes: empty graph")
        if not np.all((A == 0) | (A == 1)):
            raise GraphValidationError("adjacency entries must be 0 or 1")
        if not np.all(np.isfinite(W)) or not np.all(np.asarray(W) == np.round(W)):
            raise GraphValidationError("non-integer weight")
        A = A.astype(np.int64)
        W = np.asarray(np.round(W), dtype=np.int64)
        if np.any(W[A == 1] < 1):
            raise GraphValidationError("non-integer weight: travel times on edges must be >= 1")
        zero = np.flatnonzero(A.sum(axis=1) == 0)
        if zero.size:
            raise GraphValidationError(f"zero row: node(s) {zero.tolist()} have no outgoing edge")
        ncomp, _ = connected_components(A, directed=True, connection="strong")
        if ncomp != 1:
            raise GraphValidationError(
                f"disconnected: graph has {ncomp} strongly connected components")
        labels = tuple(str(s) for s in self.labels) if self.labels else tuple(
            str(i) for i in range(n))
        if len(labels) != n:
            raise GraphValidationError(
                f"asymmetric sizes: {len(labels)} labels for {n} nodes")
        A.setflags(write=False)
        W.setflags(write=False)
        object.__setattr__(self, "adjacency", A)
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def max_weight(self) -> int:
        """Largest travel time over the edges."""
        return int(self.weights[self.adjacency == 1].max())

    def is_homogeneous(self) -> bool:
        return bool(np.all(self.weights[self.adjacency == 1] == 1))

    def index(self, node: int | str) -> int:
        """Resolve a label (or an integer index) to a node index."""
        if isinstance(node, (int, np.integer)):
            if not 0 <= node < self.n:
                raise KeyError(node)
            return int(node)
        try:
            return self.labels.index(str(node))
        except ValueError:
            raise KeyError(node) from None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "adjacency": self.adjacency.tolist(),
            "weights": self.weights.tolist(),
            "labels": list(self.labels),
        }


def validate_distribution(pi, n: int | None = None) -> np.ndarray:
    """Check that ``pi`` is a probability vector and return it as an array."""
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 1 or (n is not None and pi.size != n):
        raise GraphValidationError(f"distribution has shape {pi.shape}, expected ({n},)")
    if np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-12:
        raise GraphValidationError("distribution must be nonnegative and sum to 1")
    return pi


def graph_from_dict(data: dict) -> PatrolGraph:
    try:
        A = np.array(data["adjacency"])
        W = np.array(data["weights"])
    except KeyError as exc:
        raise GraphValidationError(f"missing key {exc.args[0]!r}") from None
    if A.dtype == object or W.dtype == object:
        raise GraphValidationError("asymmetric sizes: ragged matrix rows")
    if "n" in data and (A.ndim != 2 or int(data["n"]) != A.shape[0]):
        raise GraphValidationError(
            f"asymmetric sizes: n={data['n']} but adjacency has shape {A.shape}")
    return PatrolGraph(A, W, tuple(data.get("labels") or ()))


def load_graph(path) -> PatrolGraph:
    """Read and validate a graph file (see :func:`save_graph` for the format)."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphValidationError(f"parse error in {path}: {exc}") from None
    if not isinstance(data, dict):
        raise GraphValidationError(f"parse error in {path}: top level must be an object")
    return graph_from_dict(data)


def dumps_graph(g: PatrolGraph) -> str:
    """Canonical JSON text: one matrix row per line, two-space indent."""

    def matrix(rows):
        body = ",\n".join("    " + json.dumps(r) for r in rows)
        return "[\n" + body + "\n  ]"

    return (
        "{\n"
        f'  "n": {g.n},\n'
        f'  "adjacency": {matrix(g.adjacency.tolist())},\n'
        f'  "weights": {matrix(g.weights.tolist())},\n'
        f'  "labels": {json.dumps(list(g.labels))}\n'
        "}\n"
    )


def save_graph(g: PatrolGraph, path) -> None:
    Path(path).write_text(dumps_graph(g), encoding="utf-8")


def induced_subgraph(g: PatrolGraph, nodes: Sequence[int | str]) -> PatrolGraph:
    """Restrict ``g`` to ``nodes`` (indices or labels), keeping their order."""
    idx = [g.index(v) for v in nodes]
    if not idx:
        raise GraphValidationError("empty node subset")
    if len(set(idx)) != len(idx):
        raise GraphValidationError("duplicate nodes in subset")
    sel = np.ix_(idx, idx)
    return PatrolGraph(g.adjacency[sel], g.weights[sel], tuple(g.labels[i] for i in idx))


# Twelve intersections of a downtown San Francisco police district; travel
# times are driving minutes, target distribution proportional to monthly crime.
SF_WEIGHTS = np.array([
    [1, 3, 3, 5, 4, 6, 3, 5, 7, 4, 6, 6],
    [3, 1, 5, 4, 2, 4, 4, 5, 5, 3, 5, 5],
    [3, 5, 1, 7, 6, 8, 3, 4, 9, 4, 8, 7],
    [6, 4, 7, 1, 5, 6, 4, 7, 5, 6, 6, 7],
    [4, 3, 6, 5, 1, 3, 5, 5, 6, 3, 4, 4],
    [6, 4, 8, 5, 3, 1, 6, 7, 3, 6, 2, 3],
    [2, 5, 3, 5, 6, 7, 1, 5, 7, 5, 7, 8],
    [3, 5, 2, 7, 6, 7, 3, 1, 9, 3, 7, 5],
    [8, 6, 9, 4, 6, 4, 6, 9, 1, 8, 5, 7],
    [4, 3, 4, 6, 3, 5, 5, 3, 7, 1, 5, 3],
    [6, 4, 8, 6, 4, 2, 6, 6, 4, 5, 1, 3],
    [6, 4, 6, 6, 3, 3, 6, 4, 5, 3, 2, 1],
])
SF_CRIME_COUNTS = np.array([133, 90, 89, 87, 83, 83, 74, 64, 48, 43, 38, 34])
# Partitions used for the two-robot comparison.
SF_PARTITIONS_2 = ((0, 1, 2, 3, 4, 6, 7), (5, 8, 9, 10, 11))


def builtin_sf() -> tuple[PatrolGraph, np.ndarray]:
    """Complete 12-node San Francisco graph (self-loops included) and its target distribution."""
    n = SF_WEIGHTS.shape[0]
    g = PatrolGraph(np.ones((n, n), dtype=np.int64), SF_WEIGHTS.copy())
    pi = SF_CRIME_COUNTS / SF_CRIME_COUNTS.sum()
    return g, pi


def resolve_graph(ref: str) -> PatrolGraph:
    """Load ``builtin:sf`` or a JSON graph file."""
    if ref == "builtin:sf":
        return builtin_sf()[0]
    return load_graph(ref)
