"""Labeled undirected graphs, edge matrices and weighted Laplacians.

Nodes are numbered 1..N and edges carry 1-based labels assigned in input
order; the labels are part of the external contract so that per-node weight
outputs are reproducible across runs.
"""

from __future__ import annotations

import numpy as np

# An eigenvalue of the unweighted Laplacian below this counts as zero when
# checking connectedness (a connected graph has exactly one).
_ZERO_EIG_TOL = 1e-9


class Graph:
    """Connected undirected graph without self-loops or duplicate edges.

    Parameters
    ----------
    n : int
        Number of nodes, labeled 1..n.
    edges : iterable of (int, int)
        Node pairs; edge k (1-based) is the k-th pair.  Pairs are stored
        with the smaller endpoint first.
    """

    def __init__(self, n: int, edges):
        n = int(n)
        if n < 1:
            raise ValueError("graph needs at least one node")
        normalized = []
        seen = set()
        for i, j in edges:
            i, j = int(i), int(j)
            if not (1 <= i <= n and 1 <= j <= n):
                raise ValueError(f"edge ({i}, {j}) references a node outside 1..{n}")
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            pair = (min(i, j), max(i, j))
            if pair in seen:
                raise ValueError(f"duplicate edge ({pair[0]}, {pair[1]})")
            seen.add(pair)
            normalized.append(pair)
        self.n = n
        self.edges = tuple(normalized)

        neighbors = {i: set() for i in range(1, n + 1)}
        incident = {i: [] for i in range(1, n + 1)}
        for k, (i, j) in enumerate(self.edges, start=1):
            neighbors[i].add(j)
            neighbors[j].add(i)
            incident[i].append(k)
            incident[j].append(k)
        self._neighbors = {i: tuple(sorted(s)) for i, s in neighbors.items()}
        self._incident = {i: tuple(ks) for i, ks in incident.items()}

        # connected iff the unweighted Laplacian has exactly one zero eigenvalue
        if n > 1:
            eigs = np.linalg.eigvalsh(self.unweighted_laplacian())
            if int(np.sum(eigs < _ZERO_EIG_TOL)) != 1:
                raise ValueError("graph is not connected")

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, i: int) -> tuple:
        """Nodes adjacent to node ``i``, ascending."""
        return self._neighbors[i]

    def incident_edges(self, i: int) -> tuple:
        """Labels of the edges touching node ``i``, ascending."""
        return self._incident[i]

    def degree(self, i: int) -> int:
        return len(self._incident[i])

    def unweighted_laplacian(self) -> np.ndarray:
        return weighted_laplacian(self, np.ones(self.num_edges))

    def __repr__(self):
        return f"Graph(n={self.n}, edges={list(self.edges)})"


def edge_matrix(graph: Graph, k: int) -> np.ndarray:
    """Rank-one Laplacian contribution of edge ``k``.

    For edge k = (i, j) the matrix has +1 at (i,i) and (j,j) and -1 at
    (i,j) and (j,i); equivalently (e_i - e_j)(e_i - e_j)^T.
    """
    if not 1 <= k <= graph.num_edges:
        raise ValueError(f"edge label {k} out of range 1..{graph.num_edges}")
    i, j = graph.edges[k - 1]
    E = np.zeros((graph.n, graph.n))
    a, b = i - 1, j - 1
    E[a, a] = E[b, b] = 1.0
    E[a, b] = E[b, a] = -1.0
    return E


def add_edge_term(matrix: np.ndarray, graph: Graph, k: int, coeff: float) -> None:
    """In-place ``matrix += coeff * edge_matrix(graph, k)`` touching 4 entries."""
    i, j = graph.edges[k - 1]
    a, b = i - 1, j - 1
    matrix[a, a] += coeff
    matrix[b, b] += coeff
    matrix[a, b] -= coeff
    matrix[b, a] -= coeff


def weighted_laplacian(graph: Graph, weights) -> np.ndarray:
    """Sum of ``weights[k-1] * edge_matrix(graph, k)`` over all edges."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (graph.num_edges,):
        raise ValueError(
            f"expected {graph.num_edges} edge weights, got shape {weights.shape}"
        )
    if np.any(weights < 0):
        raise ValueError("edge weights must be nonnegative")
    L = np.zeros((graph.n, graph.n))
    for k, w in enumerate(weights, start=1):
        add_edge_term(L, graph, k, float(w))
    return L


def algebraic_connectivity(laplacian) -> float:
    """Second-smallest eigenvalue of a Laplacian matrix.

    The input must actually be a Laplacian: symmetric, rows summing to zero
    and positive semidefinite (both within 1e-9, scaled).
    """
    L = np.asarray(laplacian, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1] or L.shape[0] < 2:
        raise ValueError("expected a square matrix of order >= 2")
    scale = 1.0 + float(np.abs(L).max())
    if float(np.abs(L - L.T).max()) > 1e-9 * scale:
        raise ValueError("matrix is not symmetric")
    if float(np.abs(L.sum(axis=1)).max()) > 1e-9 * scale:
        raise ValueError("matrix rows do not sum to zero")
    eigs = np.linalg.eigvalsh((L + L.T) / 2.0)
    if eigs[0] < -1e-9 * scale:
        raise ValueError("matrix is not positive semidefinite")
    return float(eigs[1])


def parse_graph(text: str) -> Graph:
    """Parse the edge-list graph format.

    The first non-comment line is the node count N; every following
    non-comment line is "i j" with 1 <= i, j <= N.  ``#`` starts a comment,
    blank lines are ignored, edge labels follow file order starting at 1.
    """
    n = None
    edges = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if n is None:
            if len(fields) != 1:
                raise ValueError(f"line {lineno}: expected the node count, got {raw!r}")
            try:
                n = int(fields[0])
            except ValueError:
                raise ValueError(f"line {lineno}: node count {fields[0]!r} is not an integer") from None
            if n < 1:
                raise ValueError(f"line {lineno}: node count must be positive")
            continue
        if len(fields) != 2:
            raise ValueError(f"line {lineno}: expected 'i j', got {raw!r}")
        try:
            i, j = int(fields[0]), int(fields[1])
        except ValueError:
            raise ValueError(f"line {lineno}: endpoints must be integers, got {raw!r}") from None
        if not (1 <= i <= n and 1 <= j <= n):
            raise ValueError(f"line {lineno}: edge ({i}, {j}) references a node outside 1..{n}")
        if i == j:
            raise ValueError(f"line {lineno}: self-loop at node {i}")
        pair = (min(i, j), max(i, j))
        if pair in seen:
            raise ValueError(f"line {lineno}: duplicate edge ({pair[0]}, {pair[1]})")
        seen.add(pair)
        edges.append(pair)
    if n is None:
        raise ValueError("empty graph file")
    return Graph(n, edges)
