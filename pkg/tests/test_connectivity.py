"""Distributed connectivity maximization: basis matrices, node-local
assembly, field values, synchronous rounds and small end-to-end runs."""

import numpy as np
import pytest

from conftest import (
    inbox_for,
    random_connected_graph,
    replace_node,
    worst_field_fd_error,
)
from pdflow.connectivity import (
    DivergenceError,
    NetworkState,
    NodeState,
    aggregate_augmented_lagrangian,
    assemble_weights,
    assembled_connectivity,
    coeffs_to_matrix,
    contributions_vector,
    initial_network,
    make_message,
    network_residual,
    node_fields,
    node_matrix,
    num_basis,
    objective_value,
    random_network,
    run_round,
    simulate,
    symmetric_basis,
)
from pdflow.flow import SolverConfig
from pdflow.graphs import Graph, edge_matrix
from pdflow.spectral import smoothed_max_eig, smoothed_max_eig_grad

P3 = Graph(3, [(1, 2), (2, 3)])
K2 = Graph(2, [(1, 2)])
K3 = Graph(3, [(1, 2), (2, 3), (1, 3)])


def zero_network(graph, eps=1e-3):
    nodes = [
        NodeState(
            node=i,
            mu=0.0,
            w={k: 0.0 for k in graph.incident_edges(i)},
            z=np.zeros(num_basis(graph.n)),
            v=0.0,
        )
        for i in range(1, graph.n + 1)
    ]
    return NetworkState(graph=graph, nodes=tuple(nodes), eps=eps)


def k2_equilibrium(eps=1e-3):
    """Exact fixed point of the K2 dynamics (in double precision).

    With mu large enough, the all-ones direction's softmax weight underflows
    to exactly zero, so every field evaluates to exactly 0.0.
    """
    mu = 2.0
    net = NetworkState(
        graph=K2,
        nodes=(
            NodeState(node=1, mu=mu, w={1: 1.0}, z=np.zeros(3), v=0.0),
            NodeState(node=2, mu=mu, w={1: 1.0}, z=np.zeros(3), v=0.0),
        ),
        eps=eps,
    )
    G = smoothed_max_eig_grad(node_matrix(net, 1), eps)
    v = float(G[0, 0] + G[1, 1] - 2.0 * G[0, 1])
    nodes = tuple(replace_node(net, i, v=v).nodes[i - 1] for i in (1, 2))
    return NetworkState(graph=K2, nodes=nodes, eps=eps)


class TestSymmetricBasis:
    def test_first_is_corner_diagonal(self):
        B = symmetric_basis(1, 3)
        expected = np.zeros((3, 3))
        expected[0, 0] = 1.0
        assert np.array_equal(B, expected)

    def test_second_is_off_diagonal_pair(self):
        B = symmetric_basis(2, 3)
        expected = np.zeros((3, 3))
        expected[0, 1] = expected[1, 0] = 1.0
        assert np.array_equal(B, expected)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            symmetric_basis(7, 3)
        with pytest.raises(ValueError):
            symmetric_basis(0, 3)

    def test_span_reproduces_any_symmetric_matrix(self):
        rng = np.random.default_rng(51)
        n = 4
        S = rng.normal(size=(n, n))
        S = (S + S.T) / 2.0
        z = np.array([S[p, q] for p, q in zip(*np.triu_indices(n))])
        total = sum(z[l] * symmetric_basis(l + 1, n) for l in range(num_basis(n)))
        assert np.abs(total - S).max() <= 1e-15
        assert np.array_equal(coeffs_to_matrix(z, n), total)


class TestNodeMatrix:
    def test_zero_state_is_zero_matrix(self):
        net = zero_network(P3)
        for i in (1, 2, 3):
            assert np.array_equal(node_matrix(net, i), np.zeros((3, 3)))

    def test_endpoint_with_unit_weight(self):
        net = zero_network(P3)
        net = replace_node(net, 1, w={1: 1.0})
        assert np.array_equal(node_matrix(net, 1), -edge_matrix(P3, 1))

    def test_equal_z_cancels(self):
        rng = np.random.default_rng(52)
        z = rng.normal(size=num_basis(3))
        net = zero_network(P3)
        for i in (1, 2, 3):
            net = replace_node(net, i, z=z)
        for i in (1, 2, 3):
            assert np.abs(node_matrix(net, i)).max() <= 1e-15

    def test_gauge_shift_leaves_matrices_unchanged(self):
        # adding the same Z to every node changes nothing
        rng = np.random.default_rng(53)
        net = random_network(P3, 1e-2, rng)
        shift = rng.normal(size=num_basis(3))
        shifted = net
        for i in (1, 2, 3):
            shifted = replace_node(shifted, i, z=net.nodes[i - 1].z + shift)
        for i in (1, 2, 3):
            assert np.abs(node_matrix(net, i) - node_matrix(shifted, i)).max() <= 1e-12


class TestNodeFields:
    def test_budget_satisfied_gives_zero_dual_field(self):
        net = initial_network(P3, 1e-3)  # uniform start is budget-feasible
        for i in (1, 2, 3):
            fields = node_fields(net, i, inbox_for(net, i))
            assert fields.dv == 0.0

    def test_orthant_projection_at_zero_weight(self):
        # at w = 0 a negative raw field is clamped to zero by the projection
        net = zero_network(K2, eps=0.5)
        net = replace_node(net, 1, v=10.0)  # makes the raw w-field negative
        fields = node_fields(net, 1, inbox_for(net, 1))
        assert fields.dw[1] == 0.0

    def test_symmetric_triangle_has_zero_z_field(self):
        # identical nodes on a vertex-transitive graph: G_i = G_j
        net = initial_network(K3, 1e-2)
        for i in (1, 2, 3):
            fields = node_fields(net, i, inbox_for(net, i))
            assert np.abs(fields.dz).max() <= 1e-14

    def test_missing_message_is_protocol_error(self):
        net = initial_network(P3, 1e-3)
        with pytest.raises(ValueError, match="node 2"):
            node_fields(net, 2, inbox_for(net, 2)[:1])

    def test_unexpected_sender_is_protocol_error(self):
        net = initial_network(P3, 1e-3)
        inbox = inbox_for(net, 1) + [make_message(net, 3)]
        with pytest.raises(ValueError, match="node 1"):
            node_fields(net, 1, inbox)

    def test_duplicate_sender_is_protocol_error(self):
        net = initial_network(P3, 1e-3)
        inbox = inbox_for(net, 1) * 2
        with pytest.raises(ValueError, match="duplicate"):
            node_fields(net, 1, inbox)

    def test_locality_ignores_non_neighbor_state(self):
        rng = np.random.default_rng(54)
        net = random_network(P3, 1e-2, rng)
        inbox = inbox_for(net, 1)  # node 1 only hears node 2
        before = node_fields(net, 1, inbox)
        perturbed = replace_node(net, 3, mu=99.0, v=-7.0, z=rng.normal(size=6))
        after = node_fields(perturbed, 1, inbox)
        assert before.dmu == after.dmu
        assert before.dw == after.dw
        assert np.array_equal(before.dz, after.dz)
        assert before.dv == after.dv

    def test_fields_match_finite_differences(self):
        rng = np.random.default_rng(55)
        for _ in range(5):
            graph = random_connected_graph(rng)
            net = random_network(graph, float(rng.uniform(0.3, 1.0)), rng)
            assert worst_field_fd_error(net) <= 1e-5


class TestRound:
    def test_equilibrium_is_fixed_point(self):
        net = k2_equilibrium()
        assert network_residual(net) == 0.0
        after = run_round(net, 0.05)
        for i in (1, 2):
            a, b = net.nodes[i - 1], after.nodes[i - 1]
            assert a.mu == b.mu and a.v == b.v and a.w == b.w
            assert np.array_equal(a.z, b.z)

    def test_zero_state_dual_update(self):
        # every node starts with empty budget: dv = -1, so v <- -dt
        net = zero_network(P3)
        after = run_round(net, 0.25)
        for node in after.nodes:
            assert node.v == -0.25

    def test_deterministic(self):
        rng = np.random.default_rng(56)
        net = random_network(P3, 1e-2, rng)
        a = run_round(net, 1e-2)
        b = run_round(net, 1e-2)
        for x, y in zip(a.nodes, b.nodes):
            assert x.mu == y.mu and x.v == y.v and x.w == y.w
            assert np.array_equal(x.z, y.z)

    def test_matches_node_fields_applied_in_any_order(self):
        # recompute the round by calling node_fields per node in reversed
        # order and applying the prox/Euler updates by hand
        rng = np.random.default_rng(57)
        net = random_network(P3, 1e-2, rng)
        # keep weights strictly positive so the projected field equals the
        # raw one and the prox update is reproducible from node_fields
        for i in (1, 2, 3):
            net = replace_node(
                net, i, w={k: v + 0.5 for k, v in net.nodes[i - 1].w.items()}
            )
        dt = 1e-3
        after = run_round(net, dt)
        rebuilt = {}
        for i in (3, 2, 1):
            node = net.nodes[i - 1]
            fields = node_fields(net, i, inbox_for(net, i))
            rebuilt[i] = NodeState(
                node=i,
                mu=node.mu + dt * fields.dmu,
                w={k: max(0.0, node.w[k] + dt * fields.dw[k]) for k in node.w},
                z=node.z + dt * fields.dz,
                v=node.v + dt * fields.dv,
            )
        for i in (1, 2, 3):
            assert after.nodes[i - 1].mu == rebuilt[i].mu
            assert after.nodes[i - 1].w == rebuilt[i].w
            assert np.array_equal(after.nodes[i - 1].z, rebuilt[i].z)
            assert after.nodes[i - 1].v == rebuilt[i].v

    def test_weights_stay_nonnegative_exactly(self):
        rng = np.random.default_rng(58)
        net = random_network(P3, 1e-2, rng)
        for _ in range(200):
            net = run_round(net, 5e-2)
            for node in net.nodes:
                assert all(w >= 0.0 for w in node.w.values())

    def test_divergence_names_node(self):
        # a huge budget violation overflows the dual update
        net = zero_network(K2, eps=1e-3)
        net = replace_node(net, 1, w={1: 1e308})
        with pytest.raises(DivergenceError, match="node 1"):
            run_round(net, 10.0)


class TestAssembly:
    def test_zero_contributions(self):
        assert np.array_equal(assemble_weights(zero_network(P3)), [0.0, 0.0])

    def test_p3_optimum_assembly(self):
        net = zero_network(P3)
        net = replace_node(net, 1, w={1: 1.0})
        net = replace_node(net, 2, w={1: 0.5, 2: 0.5})
        net = replace_node(net, 3, w={2: 1.0})
        assert np.allclose(assemble_weights(net), [1.5, 1.5], atol=0)
        assert assembled_connectivity(net) == pytest.approx(1.5, abs=1e-12)

    def test_k2_both_endpoints_contribute(self):
        net = initial_network(K2, 1e-3)  # single incident edge: share = 1
        assert np.array_equal(assemble_weights(net), [2.0])

    def test_contributions_vector_order(self):
        net = initial_network(P3, 1e-3)
        # (node, edge) pairs in order: (1,1), (2,1), (2,2), (3,2)
        assert contributions_vector(net) == (1.0, 0.5, 0.5, 1.0)


class TestObjective:
    def test_all_zero_state(self):
        net = zero_network(P3, eps=0.2)
        assert objective_value(net) == pytest.approx(3 * 0.2 * np.log(3), abs=1e-12)

    def test_aggregate_lagrangian_reduces_to_objective_when_feasible(self):
        net = initial_network(P3, 1e-2)  # budgets hold exactly
        assert aggregate_augmented_lagrangian(net) == pytest.approx(
            objective_value(net), abs=1e-12
        )

    def test_matches_manual_sum(self):
        rng = np.random.default_rng(59)
        net = random_network(P3, 0.5, rng)
        manual = sum(smoothed_max_eig(node_matrix(net, i), 0.5) for i in (1, 2, 3))
        assert objective_value(net) == pytest.approx(manual, abs=1e-12)


class TestSimulate:
    def test_k2_forced_budget(self):
        cfg = SolverConfig(dt=1e-2, max_steps=20_000, tol=1e-6, record_stride=100)
        net, hist = simulate(K2, 1e-3, cfg)
        assert hist[-1].residual <= 1e-6
        for node in net.nodes:
            assert node.w[1] == pytest.approx(1.0, abs=1e-5)
        assert assemble_weights(net)[0] == pytest.approx(2.0, abs=1e-5)

    def test_history_contains_final_round(self):
        cfg = SolverConfig(dt=1e-2, max_steps=50, tol=1e-30, record_stride=20)
        net, hist = simulate(P3, 1e-2, cfg)
        assert [h.round for h in hist] == [0, 20, 40, 50]
        assert len(hist[0].contributions) == 4

    def test_threads_give_identical_results(self):
        cfg = SolverConfig(dt=1e-2, max_steps=30, tol=1e-30, record_stride=10)
        rng = np.random.default_rng(60)
        init = random_network(P3, 1e-2, rng)
        net1, hist1 = simulate(P3, 1e-2, cfg, init=init, threads=1)
        net2, hist2 = simulate(P3, 1e-2, cfg, init=init, threads=3)
        for a, b in zip(net1.nodes, net2.nodes):
            assert a.mu == b.mu and a.w == b.w and a.v == b.v
            assert np.array_equal(a.z, b.z)
        assert [h.residual for h in hist1] == [h.residual for h in hist2]

    def test_rejects_foreign_init(self):
        cfg = SolverConfig(dt=1e-2, max_steps=10, tol=1e-6)
        init = initial_network(K2, 1e-3)
        with pytest.raises(ValueError, match="different graph"):
            simulate(P3, 1e-3, cfg, init=init)


class TestNetworkStateValidation:
    def test_wrong_weight_keys(self):
        with pytest.raises(ValueError, match="incident"):
            NetworkState(
                graph=K2,
                nodes=(
                    NodeState(node=1, mu=0.0, w={2: 1.0}, z=np.zeros(3), v=0.0),
                    NodeState(node=2, mu=0.0, w={1: 1.0}, z=np.zeros(3), v=0.0),
                ),
                eps=1e-3,
            )

    def test_wrong_z_length(self):
        with pytest.raises(ValueError, match="z must have"):
            NetworkState(
                graph=K2,
                nodes=(
                    NodeState(node=1, mu=0.0, w={1: 1.0}, z=np.zeros(2), v=0.0),
                    NodeState(node=2, mu=0.0, w={1: 1.0}, z=np.zeros(3), v=0.0),
                ),
                eps=1e-3,
            )

    def test_message_gradient_has_unit_trace(self):
        rng = np.random.default_rng(61)
        net = random_network(P3, 1e-2, rng)
        for i in (1, 2, 3):
            msg = make_message(net, i)
            assert abs(np.trace(msg.G) - 1.0) <= 1e-10
            assert msg.Z.shape == (3, 3) and msg.G.shape == (3, 3)
