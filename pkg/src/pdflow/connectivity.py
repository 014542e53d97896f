"""Distributed maximization of a graph's algebraic connectivity.

Each node i owns a scalar shift mu, one weight contribution per incident
edge, a symmetric auxiliary matrix Z (stored as upper-triangle coefficients
z) and a scalar dual v for its unit weight budget.  The node-local matrix

    X_i = -mu_i * ONES - sum_{k incident} w_k_i * E_k + sum_{j ~ i} (Z_i - Z_j)

has -lambda2_i as (approximately) its largest eigenvalue, and the network
minimizes sum_i of the smoothed maximum eigenvalue of X_i subject to each
node's weight budget.  The projected saddle-point dynamics of that problem
decompose edge-locally: a node only ever needs its neighbors' Z and
smoothed-eigenvalue gradients, which are exchanged once per synchronous
round.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np

from .flow import DivergenceError, SolverConfig
from .graphs import Graph, add_edge_term, algebraic_connectivity, weighted_laplacian
from .spectral import smoothed_max_eig, smoothed_max_eig_grad

# A weight contribution counts as sitting on the zero bound within this band.
_ACTIVITY_TOL = 1e-9


def num_basis(n: int) -> int:
    """Dimension of the space of symmetric n x n matrices."""
    return n * (n + 1) // 2


@lru_cache(maxsize=None)
def _triu(n: int):
    rows, cols = np.triu_indices(n)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def symmetric_basis(l: int, n: int) -> np.ndarray:
    """The l-th canonical basis matrix of symmetric n x n matrices.

    Index l (1-based) enumerates upper-triangle positions (p, q), p <= q, in
    row-major order; the matrix has ones at (p, q) and (q, p).
    """
    total = num_basis(n)
    if not 1 <= l <= total:
        raise ValueError(f"basis index {l} out of range 1..{total}")
    rows, cols = _triu(n)
    p, q = int(rows[l - 1]), int(cols[l - 1])
    B = np.zeros((n, n))
    B[p, q] = B[q, p] = 1.0
    return B


def coeffs_to_matrix(z, n: int) -> np.ndarray:
    """Symmetric matrix sum_l z_l * B_l from its basis coefficients."""
    z = np.asarray(z, dtype=float)
    if z.shape != (num_basis(n),):
        raise ValueError(f"expected {num_basis(n)} coefficients, got shape {z.shape}")
    rows, cols = _triu(n)
    Z = np.zeros((n, n))
    Z[rows, cols] = z
    Z[cols, rows] = z
    return Z


def matrix_basis_pairings(S: np.ndarray) -> np.ndarray:
    """Vector of trace(S @ B_l) over all basis matrices.

    Equals 2*S_pq off the diagonal and S_pp on it, for symmetric S.
    """
    n = S.shape[0]
    rows, cols = _triu(n)
    vals = S[rows, cols].astype(float)
    off = rows != cols
    vals[off] *= 2.0
    return vals


@dataclass(frozen=True)
class NodeState:
    """One node's optimization variables.

    ``w`` maps each incident edge label to that node's weight contribution;
    contributions stay nonnegative under the projected update.
    """

    node: int
    mu: float
    w: dict
    z: np.ndarray
    v: float

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float).copy()
        z.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "w", dict(self.w))

    def budget_violation(self) -> float:
        """Sum of this node's contributions minus its unit budget."""
        return float(sum(self.w.values())) - 1.0


@dataclass(frozen=True)
class NetworkState:
    graph: Graph
    nodes: tuple
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        nodes = tuple(self.nodes)
        if len(nodes) != self.graph.n:
            raise ValueError(f"expected {self.graph.n} node states, got {len(nodes)}")
        nb = num_basis(self.graph.n)
        for idx, node in enumerate(nodes, start=1):
            if node.node != idx:
                raise ValueError(f"node state at position {idx} carries id {node.node}")
            expected = set(self.graph.incident_edges(idx))
            if set(node.w.keys()) != expected:
                raise ValueError(
                    f"node {idx}: weight keys {sorted(node.w)} do not match "
                    f"incident edges {sorted(expected)}"
                )
            if node.z.shape != (nb,):
                raise ValueError(f"node {idx}: z must have {nb} entries")
        object.__setattr__(self, "nodes", nodes)


@dataclass(frozen=True)
class RoundMessage:
    """What a node broadcasts each round: its Z matrix and its gradient."""

    sender: int
    Z: np.ndarray
    G: np.ndarray


class NodeFields(NamedTuple):
    dmu: float
    dw: dict
    dz: np.ndarray
    dv: float


class HistoryPoint(NamedTuple):
    round: int
    objective: float
    lambda2: float
    residual: float
    contributions: tuple


def _assemble_matrix(graph: Graph, node: NodeState, Z_own: np.ndarray, neighbor_Z) -> np.ndarray:
    """X_i from a node's own variables and its neighbors' Z matrices.

    ``neighbor_Z`` must be ordered by ascending neighbor id so the floating
    point sum is reproducible.
    """
    n = graph.n
    X = np.full((n, n), -node.mu)
    for k, wk in node.w.items():
        add_edge_term(X, graph, k, -wk)
    degree = graph.degree(node.node)
    if degree:
        X = X + degree * Z_own
        for Zj in neighbor_Z:
            X -= Zj
    return X


def node_matrix(network: NetworkState, i: int) -> np.ndarray:
    """The matrix X_i whose largest eigenvalue node i is driving down."""
    graph = network.graph
    if not 1 <= i <= graph.n:
        raise ValueError(f"node id {i} out of range 1..{graph.n}")
    node = network.nodes[i - 1]
    Z_own = coeffs_to_matrix(node.z, graph.n)
    neighbor_Z = [
        coeffs_to_matrix(network.nodes[j - 1].z, graph.n) for j in graph.neighbors(i)
    ]
    return _assemble_matrix(graph, node, Z_own, neighbor_Z)


def _edge_pairing(G: np.ndarray, graph: Graph, k: int) -> float:
    """trace(G @ E_k) = G_ii + G_jj - 2 G_ij for edge k = (i, j)."""
    i, j = graph.edges[k - 1]
    a, b = i - 1, j - 1
    return float(G[a, a] + G[b, b] - 2.0 * G[a, b])


def _raw_fields(graph, node, G_own, neighbor_G):
    """Unprojected field values for one node.

    ``neighbor_G`` is ordered by ascending neighbor id.  Returns
    (dmu, raw dw by edge label, dz, dv); dw is the descent value before the
    nonnegativity projection.
    """
    dmu = float(G_own.sum())
    budget = node.budget_violation()
    dw_raw = {
        k: _edge_pairing(G_own, graph, k) - node.v - budget
        for k in graph.incident_edges(node.node)
    }
    degree = graph.degree(node.node)
    S = degree * G_own
    for Gj in neighbor_G:
        S = S - Gj
    dz = -matrix_basis_pairings(S)
    return dmu, dw_raw, dz, budget


def _project_w_field(node: NodeState, dw_raw: dict) -> dict:
    """Tangent-cone projection of the weight field onto the orthant at w."""
    return {
        k: (max(val, 0.0) if node.w[k] <= _ACTIVITY_TOL else val)
        for k, val in dw_raw.items()
    }


def node_fields(network: NetworkState, i: int, inbox) -> NodeFields:
    """Field values for node i given one message from each neighbor.

    The weight field is returned already projected onto the tangent cone of
    the nonnegative orthant at the current contributions.  Raises if the
    inbox does not contain exactly one message per neighbor.
    """
    graph = network.graph
    node = network.nodes[i - 1]
    expected = graph.neighbors(i)
    by_sender = {}
    for msg in inbox:
        if msg.sender in by_sender:
            raise ValueError(f"node {i}: duplicate message from node {msg.sender}")
        by_sender[msg.sender] = msg
    if set(by_sender) != set(expected):
        raise ValueError(
            f"node {i}: expected messages from nodes {sorted(expected)}, "
            f"got {sorted(by_sender)}"
        )
    Z_own = coeffs_to_matrix(node.z, graph.n)
    X = _assemble_matrix(graph, node, Z_own, [by_sender[j].Z for j in expected])
    G_own = smoothed_max_eig_grad(X, network.eps)
    dmu, dw_raw, dz, dv = _raw_fields(
        graph, node, G_own, [by_sender[j].G for j in expected]
    )
    return NodeFields(dmu=dmu, dw=_project_w_field(node, dw_raw), dz=dz, dv=dv)


def make_message(network: NetworkState, i: int) -> RoundMessage:
    """The message node i broadcasts: its current Z and its gradient."""
    node = network.nodes[i - 1]
    Z = coeffs_to_matrix(node.z, network.graph.n)
    G = smoothed_max_eig_grad(node_matrix(network, i), network.eps)
    return RoundMessage(sender=i, Z=Z, G=G)


def _broadcast(network: NetworkState, pool=None) -> dict:
    """Phase-1 messages for every node, from one consistent snapshot.

    Each node's Z matrix is materialized once and shared between its own
    message and its neighbors' assemblies; the values are identical to
    per-node :func:`make_message` calls.
    """
    graph, eps = network.graph, network.eps
    ids = range(1, graph.n + 1)
    Z = {i: coeffs_to_matrix(network.nodes[i - 1].z, graph.n) for i in ids}

    def message(i: int) -> RoundMessage:
        node = network.nodes[i - 1]
        X = _assemble_matrix(graph, node, Z[i], [Z[j] for j in graph.neighbors(i)])
        if not np.isfinite(X).all():
            raise DivergenceError(f"node {i} produced non-finite values")
        return RoundMessage(sender=i, Z=Z[i], G=smoothed_max_eig_grad(X, eps))

    mapper = pool.map if pool is not None else map
    return dict(zip(ids, mapper(message, ids)))


def run_round(network: NetworkState, dt: float, pool=None) -> NetworkState:
    """One synchronous round: broadcast, then simultaneous Euler updates.

    Every node computes its message from the pre-round state; all updates
    then apply at once.  The weight update uses the proximal form
    w+ = max(0, w + dt * raw_field), which keeps contributions nonnegative
    exactly.  ``pool`` may be a ThreadPoolExecutor for intra-round
    parallelism; results do not depend on evaluation order.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    return _apply_round(network, dt, _broadcast(network, pool), pool)


def _apply_round(network: NetworkState, dt: float, messages: dict, pool=None) -> NetworkState:
    graph = network.graph

    def update(i: int) -> NodeState:
        node = network.nodes[i - 1]
        nbrs = graph.neighbors(i)
        dmu, dw_raw, dz, dv = _raw_fields(
            graph, node, messages[i].G, [messages[j].G for j in nbrs]
        )
        mu = node.mu + dt * dmu
        w = {k: max(0.0, wk + dt * dw_raw[k]) for k, wk in node.w.items()}
        z = node.z + dt * dz
        v = node.v + dt * dv
        values = [mu, v, *w.values()]
        if not (np.isfinite(values).all() and np.isfinite(z).all()):
            raise DivergenceError(f"node {i} produced non-finite values")
        return NodeState(node=i, mu=mu, w=w, z=z, v=v)

    ids = range(1, graph.n + 1)
    mapper = pool.map if pool is not None else map
    with np.errstate(over="ignore", invalid="ignore"):
        nodes = tuple(mapper(update, ids))
    return NetworkState(graph=graph, nodes=nodes, eps=network.eps)


def network_residual(network: NetworkState, pool=None) -> float:
    """Aggregate stationarity measure of the whole network.

    Sum of absolute budget violations plus the Euclidean norm of all
    projected primal fields (mu, w and z components of every node); zero
    exactly at equilibria of the dynamics.
    """
    messages = _broadcast(network, pool)
    return _residual_from_messages(network, messages)


def _residual_from_messages(network: NetworkState, messages: dict) -> float:
    graph = network.graph
    budget_total = 0.0
    sq = 0.0
    for i in range(1, graph.n + 1):
        node = network.nodes[i - 1]
        nbrs = graph.neighbors(i)
        dmu, dw_raw, dz, dv = _raw_fields(
            graph, node, messages[i].G, [messages[j].G for j in nbrs]
        )
        dw = _project_w_field(node, dw_raw)
        budget_total += abs(dv)
        sq += dmu * dmu + sum(val * val for val in dw.values()) + float(dz @ dz)
    return budget_total + float(np.sqrt(sq))


def objective_value(network: NetworkState) -> float:
    """Sum over nodes of the smoothed maximum eigenvalue of X_i."""
    return float(
        sum(
            smoothed_max_eig(node_matrix(network, i), network.eps)
            for i in range(1, network.graph.n + 1)
        )
    )


def aggregate_augmented_lagrangian(network: NetworkState) -> float:
    """Network-wide augmented Lagrangian (damping 1); finite-difference
    oracle target for the node fields."""
    total = 0.0
    for i in range(1, network.graph.n + 1):
        node = network.nodes[i - 1]
        g = node.budget_violation()
        total += (
            smoothed_max_eig(node_matrix(network, i), network.eps)
            + node.v * g
            + 0.5 * g * g
        )
    return float(total)


def assemble_weights(network: NetworkState) -> np.ndarray:
    """Total edge weights: each edge gets the sum of its endpoints' contributions."""
    graph = network.graph
    w = np.zeros(graph.num_edges)
    for node in network.nodes:
        for k, wk in node.w.items():
            w[k - 1] += wk
    return w


def assembled_connectivity(network: NetworkState) -> float:
    """Algebraic connectivity of the graph under the assembled edge weights."""
    return algebraic_connectivity(
        weighted_laplacian(network.graph, assemble_weights(network))
    )


def contributions_vector(network: NetworkState) -> tuple:
    """All weight contributions in (node, edge label) lexicographic order."""
    out = []
    for i in range(1, network.graph.n + 1):
        node = network.nodes[i - 1]
        for k in network.graph.incident_edges(i):
            out.append(float(node.w[k]))
    return tuple(out)


def initial_network(graph: Graph, eps: float) -> NetworkState:
    """Default start: zero mu, z and v; each node spreads its budget uniformly."""
    nodes = []
    for i in range(1, graph.n + 1):
        incident = graph.incident_edges(i)
        share = 1.0 / len(incident)
        nodes.append(
            NodeState(
                node=i,
                mu=0.0,
                w={k: share for k in incident},
                z=np.zeros(num_basis(graph.n)),
                v=0.0,
            )
        )
    return NetworkState(graph=graph, nodes=tuple(nodes), eps=eps)


def random_network(graph: Graph, eps: float, rng: np.random.Generator) -> NetworkState:
    """Arbitrary start: normal mu, z, v; uniform nonnegative contributions."""
    nodes = []
    for i in range(1, graph.n + 1):
        nodes.append(
            NodeState(
                node=i,
                mu=float(rng.standard_normal()),
                w={k: float(rng.uniform(0.0, 1.0)) for k in graph.incident_edges(i)},
                z=rng.standard_normal(num_basis(graph.n)),
                v=float(rng.standard_normal()),
            )
        )
    return NetworkState(graph=graph, nodes=tuple(nodes), eps=eps)


def simulate(
    graph: Graph,
    eps: float,
    config: SolverConfig,
    init: Optional[NetworkState] = None,
    threads: int = 1,
):
    """Run synchronous rounds until the network residual drops below tol.

    Returns ``(final_network, history)`` where history holds
    :class:`HistoryPoint` rows every ``record_stride`` rounds plus the final
    one, so the last row carries the final round count and residual.  Only
    the ``dt``, ``max_steps``, ``tol`` and ``record_stride`` fields of the
    config apply; rounds always use the proximal Euler update.
    """
    if init is None:
        network = initial_network(graph, eps)
    else:
        if init.graph is not graph and init.graph.edges != graph.edges:
            raise ValueError("init was built for a different graph")
        network = init

    history: list[HistoryPoint] = []

    def record(net: NetworkState, rnd: int, resid: float) -> None:
        history.append(
            HistoryPoint(
                round=rnd,
                objective=objective_value(net),
                lambda2=assembled_connectivity(net),
                residual=resid,
                contributions=contributions_vector(net),
            )
        )

    pool = None
    executor = None
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        executor = ThreadPoolExecutor(max_workers=threads)
        pool = executor
    try:
        rounds = 0
        last_recorded = -1
        while True:
            messages = _broadcast(network, pool)
            residual = _residual_from_messages(network, messages)
            if rounds % config.record_stride == 0:
                record(network, rounds, residual)
                last_recorded = rounds
            if residual <= config.tol or rounds >= config.max_steps:
                break
            try:
                network = _apply_round(network, config.dt, messages, pool)
            except DivergenceError as err:
                raise DivergenceError(f"round {rounds + 1}: {err}") from err
            rounds += 1
    finally:
        if executor is not None:
            executor.shutdown(wait=True)

    if last_recorded != rounds:
        record(network, rounds, residual)
    return network, history
