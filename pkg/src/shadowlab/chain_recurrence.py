"""Chain recurrence on a sampled system.

All answers are statements about the epsilon-step graph on
``system.sample(resolution)``: they hold "at resolution r, scale eps" and
no limit as r -> 0 is claimed.  Single-step edges compose to chains with
arbitrary gaps, so graph reachability is the chain relation on the sample.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .core_spaces import DynamicalSystem
from .errors import InvalidArgument, ResolutionError
from .shadowing import transition_matrix


@dataclass(frozen=True)
class ChainGraph:
    nodes: tuple
    epsilon: float
    adjacency: np.ndarray  # bool (N, N)
    resolution: float | None = None

    @property
    def size(self) -> int:
        return len(self.nodes)

    def successors(self, u: int) -> list[int]:
        return np.flatnonzero(self.adjacency[u]).tolist()

    def index(self, node) -> int:
        return self.nodes.index(node)

    def label(self) -> str:
        r = "exact" if self.resolution is None else f"{self.resolution:g}"
        return f"at resolution {r}, scale {self.epsilon:g}"


@dataclass(frozen=True)
class ChainClassDecomposition:
    recurrent_nodes: frozenset
    classes: tuple  # tuple of tuples of node indices, ordered by least index

    def __len__(self) -> int:
        return len(self.classes)


def graph_from_adjacency(adjacency, nodes: Sequence | None = None, epsilon: float = 1.0) -> ChainGraph:
    A = np.asarray(adjacency, dtype=bool)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidArgument("adjacency must be square")
    nodes = tuple(range(len(A))) if nodes is None else tuple(nodes)
    return ChainGraph(nodes, float(epsilon), A)


def build_chain_graph(system: DynamicalSystem, resolution: float, epsilon: float, nodes: Sequence | None = None) -> ChainGraph:
    """Graph on the sample with ``u -> v`` iff ``d(f(u), v) < epsilon``."""
    if not resolution > 0:
        raise InvalidArgument("resolution must be positive")
    if not epsilon > resolution:
        raise ResolutionError(
            "epsilon must exceed the sampling resolution", epsilon=epsilon, resolution=resolution
        )
    nodes = tuple(system.sample(resolution) if nodes is None else nodes)
    A = transition_matrix(system, nodes, epsilon)
    A.setflags(write=False)
    return ChainGraph(nodes, float(epsilon), A, float(resolution))


def _scc(A: np.ndarray) -> np.ndarray:
    _, labels = connected_components(csr_matrix(A), directed=True, connection="strong")
    return labels


def _cyclic_mask(A: np.ndarray, labels: np.ndarray) -> np.ndarray:
    sizes = np.bincount(labels)
    return (sizes[labels] > 1) | np.diag(A)


def chain_recurrent_set(graph: ChainGraph) -> frozenset:
    """Node indices lying on a cycle of the graph (self-loops included)."""
    A = graph.adjacency
    if A.size == 0:
        return frozenset()
    mask = _cyclic_mask(A, _scc(A))
    return frozenset(np.flatnonzero(mask).tolist())


def chain_classes(graph: ChainGraph) -> ChainClassDecomposition:
    A = graph.adjacency
    if A.size == 0:
        return ChainClassDecomposition(frozenset(), ())
    labels = _scc(A)
    mask = _cyclic_mask(A, labels)
    groups: dict[int, list[int]] = {}
    for i in np.flatnonzero(mask).tolist():
        groups.setdefault(int(labels[i]), []).append(i)
    classes = tuple(sorted((tuple(g) for g in groups.values()), key=lambda g: g[0]))
    return ChainClassDecomposition(frozenset(np.flatnonzero(mask).tolist()), classes)


def is_internally_chain_transitive(graph: ChainGraph, node_set: Iterable[int]) -> bool:
    """Is the subgraph induced on ``node_set`` strongly connected (with a cycle)?"""
    idx = sorted(set(int(i) for i in node_set))
    if not idx:
        raise InvalidArgument("node set must be nonempty")
    if idx[0] < 0 or idx[-1] >= graph.size:
        raise InvalidArgument("node index out of range")
    sub = graph.adjacency[np.ix_(idx, idx)]
    if len(idx) == 1:
        return bool(sub[0, 0])
    n, _ = connected_components(csr_matrix(sub), directed=True, connection="strong")
    return n == 1


def nonwandering_nodes(graph: ChainGraph, budget: int | None = None) -> frozenset:
    """Nodes with a first return to themselves along graph paths.

    Breadth-first from each node with path-length budget ``budget``
    (default: number of nodes, which is always enough).  On a finite graph
    this coincides with :func:`chain_recurrent_set`.
    """
    A = graph.adjacency
    N = graph.size
    budget = N if budget is None else budget
    out = []
    for s in range(N):
        frontier = A[s].copy()
        seen = frontier.copy()
        for _ in range(budget):
            if frontier[s]:
                out.append(s)
                break
            nxt = A[frontier].any(axis=0) & ~seen
            if not nxt.any():
                break
            seen |= nxt
            frontier = nxt
    return frozenset(out)


def transitive_closure(A: np.ndarray) -> np.ndarray:
    """Reachability in one or more steps (Warshall); oracle for small graphs."""
    R = np.asarray(A, dtype=bool).copy()
    for k in range(len(R)):
        R |= np.outer(R[:, k], R[k, :])
    return R


def classes_json(graph: ChainGraph, system: DynamicalSystem, dec: ChainClassDecomposition) -> dict:
    return {
        "label": graph.label(),
        "classes": {
            str(c): [system.point_to_json(graph.nodes[i]) for i in cls]
            for c, cls in enumerate(dec.classes)
        },
    }
