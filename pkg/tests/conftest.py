"""Shared test helpers: random connected graphs, the finite-difference
oracle for the distributed node fields, and the matrix-exponential oracle
for integrator orders."""

import numpy as np
from scipy.linalg import expm

from pdflow.connectivity import (
    NetworkState,
    NodeState,
    aggregate_augmented_lagrangian,
    make_message,
    num_basis,
)
from pdflow.flow import FlowState, Objective, ProblemSpec
from pdflow.graphs import Graph
from pdflow.sets import Ball, Box, FreeSpace, NonnegativeOrthant, Product


# ------------------------------------------------- simple-set sampling

def make_set_variants():
    """One representative of every set variant, including a product."""
    return [
        FreeSpace(3),
        NonnegativeOrthant(4),
        Box(lower=[0.0, -1.0, 2.0], upper=[1.0, 1.0, np.inf]),
        Box(lower=[-np.inf, 0.0], upper=[0.0, 0.0]),  # degenerate second coordinate
        Ball(center=[0.0, 0.0], radius=1.0),
        Ball(center=[1.0, -2.0, 0.5], radius=2.5),
        Product([NonnegativeOrthant(2), Ball(center=[0.0, 0.0], radius=1.0), FreeSpace(1)]),
    ]


def sample_in_set(set_, rng, boundary_bias=0.4):
    """A point of the set: either well interior or exactly on a boundary piece.

    Points within the activity twilight band (closer than ~1e-4 to a bound
    without sitting on it) are avoided: there the finite-delta quotient
    oracle is legitimately inconsistent with the closed-form limit.
    """
    x = set_.project(rng.normal(scale=2.0, size=set_.dim))
    if isinstance(set_, NonnegativeOrthant):
        snap = rng.random(set_.dim) < boundary_bias
        x = np.where(snap, 0.0, np.maximum(x, 1e-3))
    elif isinstance(set_, Box):
        lo, hi = set_.lower, set_.upper
        for i in range(set_.dim):
            if rng.random() < boundary_bias and np.isfinite(lo[i]):
                x[i] = lo[i]
            elif rng.random() < boundary_bias and np.isfinite(hi[i]):
                x[i] = hi[i]
            else:
                margin_lo = lo[i] + 1e-3 if np.isfinite(lo[i]) else -np.inf
                margin_hi = hi[i] - 1e-3 if np.isfinite(hi[i]) else np.inf
                if margin_lo > margin_hi:  # degenerate coordinate
                    x[i] = lo[i]
                else:
                    x[i] = np.clip(x[i], margin_lo, margin_hi)
    elif isinstance(set_, Ball):
        d = x - set_.center
        r = np.linalg.norm(d)
        if rng.random() < boundary_bias and r > 0:
            x = set_.center + d * (set_.radius / r)
        elif r > 0.9 * set_.radius:
            x = set_.center + d * (0.5 * set_.radius / max(r, 1e-12))
    elif isinstance(set_, Product):
        x = np.concatenate(
            [sample_in_set(c, rng, boundary_bias) for c in set_.components]
        )
    return x


def strictly_interior(set_, x, margin=1e-6) -> bool:
    """Distance from x to the boundary exceeds the activity band."""
    if isinstance(set_, FreeSpace):
        return True
    if isinstance(set_, NonnegativeOrthant):
        return bool(np.all(x > margin))
    if isinstance(set_, Box):
        return bool(np.all(x > set_.lower + margin) and np.all(x < set_.upper - margin))
    if isinstance(set_, Ball):
        return bool(np.linalg.norm(x - set_.center) < set_.radius - margin)
    if isinstance(set_, Product):
        return all(
            strictly_interior(c, x[s], margin)
            for c, s in zip(set_.components, set_._slices)
        )
    raise TypeError(set_)


# ------------------------------------------------- graphs and networks

def random_connected_graph(rng, min_nodes=2, max_nodes=4) -> Graph:
    """Spanning path plus random extra edges."""
    n = int(rng.integers(min_nodes, max_nodes + 1))
    edges = [(i, i + 1) for i in range(1, n)]
    extra = sorted(
        {(a, b) for a in range(1, n + 1) for b in range(a + 1, n + 1)} - set(edges)
    )
    for pair in extra:
        if rng.random() < 0.4:
            edges.append(pair)
    return Graph(n, edges)


def replace_node(network: NetworkState, i: int, **changes) -> NetworkState:
    node = network.nodes[i - 1]
    fields = dict(node=i, mu=node.mu, w=node.w, z=node.z, v=node.v)
    fields.update(changes)
    nodes = list(network.nodes)
    nodes[i - 1] = NodeState(**fields)
    return NetworkState(graph=network.graph, nodes=tuple(nodes), eps=network.eps)


def inbox_for(network: NetworkState, i: int):
    return [make_message(network, j) for j in network.graph.neighbors(i)]


def unprojected_fields(network: NetworkState, i: int):
    """Raw (pre-projection) field values, via the message-passing surface."""
    from pdflow.connectivity import (
        _assemble_matrix,
        _raw_fields,
        coeffs_to_matrix,
    )
    from pdflow.spectral import smoothed_max_eig_grad

    graph = network.graph
    node = network.nodes[i - 1]
    msgs = {m.sender: m for m in inbox_for(network, i)}
    nbrs = graph.neighbors(i)
    Z_own = coeffs_to_matrix(node.z, graph.n)
    X = _assemble_matrix(graph, node, Z_own, [msgs[j].Z for j in nbrs])
    G_own = smoothed_max_eig_grad(X, network.eps)
    return _raw_fields(graph, node, G_own, [msgs[j].G for j in nbrs])


def worst_field_fd_error(network: NetworkState) -> float:
    """Largest relative gap between the analytic node fields and central
    finite differences of the aggregate augmented Lagrangian."""
    graph = network.graph
    La = aggregate_augmented_lagrangian
    worst = 0.0

    def rel(analytic, fd):
        return abs(-fd - analytic) / max(1.0, abs(analytic))

    for i in range(1, graph.n + 1):
        node = network.nodes[i - 1]
        dmu, dw_raw, dz, dv = unprojected_fields(network, i)

        h = 1e-6 * (1.0 + abs(node.mu))
        fd = (
            La(replace_node(network, i, mu=node.mu + h))
            - La(replace_node(network, i, mu=node.mu - h))
        ) / (2 * h)
        worst = max(worst, rel(dmu, fd))

        for k in graph.incident_edges(i):
            h = 1e-6 * (1.0 + abs(node.w[k]))
            wp, wm = dict(node.w), dict(node.w)
            wp[k] += h
            wm[k] -= h
            fd = (
                La(replace_node(network, i, w=wp)) - La(replace_node(network, i, w=wm))
            ) / (2 * h)
            worst = max(worst, rel(dw_raw[k], fd))

        for l in range(num_basis(graph.n)):
            h = 1e-6 * (1.0 + abs(node.z[l]))
            zp, zm = node.z.copy(), node.z.copy()
            zp[l] += h
            zm[l] -= h
            fd = (
                La(replace_node(network, i, z=zp)) - La(replace_node(network, i, z=zm))
            ) / (2 * h)
            worst = max(worst, rel(dz[l], fd))

        # the dual field is +dL/dv and linear in v, so it must match exactly
        assert abs(dv - node.budget_violation()) == 0.0
    return worst


# ------------------------------------------------- linear saddle oracle

def saddle_test_system(q=1.0, a=1.0, b0=1.0, rho=1.0):
    """Unconstrained 1-primal/1-dual problem whose flow is a 2x2 linear ODE.

    Returns the problem, the system matrix M (d/dt [x; v] = M [x; v] + c)
    and the equilibrium point.
    """
    problem = ProblemSpec(
        objective=Objective.quadratic(np.array([[q]]), np.zeros(1)),
        A=np.array([[a]]),
        b=np.array([b0]),
        set=FreeSpace(1),
        rho=rho,
    )
    M = np.array([[-q - rho * a * a, -a], [a, 0.0]])
    c = np.array([rho * a * b0, -b0])
    z_star = -np.linalg.solve(M, c)
    return problem, M, z_star


def saddle_global_error(stepper, dt, horizon, z0):
    """Distance to the exact (matrix-exponential) flow at the reached time."""
    problem, M, z_star = saddle_test_system()
    state = FlowState(x=z0[:1], v=z0[1:])
    steps = int(round(horizon / dt))
    for _ in range(steps):
        state = stepper(problem, state, dt)
    exact = z_star + expm(M * (steps * dt)) @ (z0 - z_star)
    return float(np.linalg.norm(np.concatenate([state.x, state.v]) - exact))


def integrator_order_slope(stepper, dts=(1e-1, 10 ** -1.5, 1e-2, 10 ** -2.5, 1e-3)):
    """Log-log slope of global error vs dt, ignoring the roundoff floor."""
    z0 = np.array([4.0, -3.0])
    errors = [saddle_global_error(stepper, dt, 2.0, z0) for dt in dts]
    pairs = [(dt, err) for dt, err in zip(dts, errors) if err > 1e-12]
    assert len(pairs) >= 3
    logd = np.log([d for d, _ in pairs])
    loge = np.log([e for _, e in pairs])
    return float(np.polyfit(logd, loge, 1)[0])
