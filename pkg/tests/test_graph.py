import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from graphlp.generators import WindowSpec, cycle_graph, grid_window, path_graph
from graphlp.graph import (Box, EdgeFlow, Graph, GraphError, ProbabilityMeasure, VertexFunction,
                           conjugate_exponent, divergence, dp_norm, edge_pairing, gradient,
                           lp_norm_edges, lp_norm_vertices, mazur_map, vertex_pairing)

from conftest import random_graph


def fn(graph, vals):
    return VertexFunction(graph, np.asarray(vals, dtype=float))


# --- construction ----------------------------------------------------------------------------

def test_rejects_loops_duplicates_and_disconnected():
    with pytest.raises(GraphError):
        Graph.from_edges(2, [(0, 0)])
    with pytest.raises(GraphError):
        Graph.from_edges(2, [(0, 1), (1, 0)])
    with pytest.raises(GraphError):
        Graph.from_edges(4, [(0, 1), (2, 3)])
    with pytest.raises(GraphError):
        Graph.from_edges(3, [(0, 1), (1, 2)], root=1, frontier=[1])


def test_rejects_asymmetric_csr():
    with pytest.raises(GraphError):
        Graph(np.array([0, 1, 1]), np.array([1]))


def test_vertex_cap():
    with pytest.raises(GraphError):
        grid_window(WindowSpec(2, 5), max_vertices=100)


def test_box_csr_matches_networkx_grid():
    box = Box(3, 2)
    indptr, indices = box.csr()
    g = Graph(indptr, indices, root=box.origin)
    ref = nx.grid_graph(dim=[box.side] * 3)
    assert g.edge_count == ref.number_of_edges()
    # neighbour sums through the stencil agree with sparse adjacency
    v = np.random.default_rng(0).normal(size=box.size)
    assert np.allclose(Box.neighbor_sum(v.reshape(box.shape)).ravel(), g.adjacency @ v)


def test_box_distances_match_bfs():
    g = grid_window(WindowSpec(2, 4))
    ref = Graph(g.indptr, g.indices, root=g.root)
    for x in (g.root, 0, 17):
        assert np.array_equal(g.distances([x]), ref.distances([x]))
    assert np.array_equal(g.frontier_distance, Graph(g.indptr, g.indices, root=g.root,
                                                     frontier=g.frontier).frontier_distance)


def test_edge_ids_reject_non_edges():
    g = path_graph(3)
    assert list(g.edge_ids([(1, 0), (1, 2)])) == [0, 1]
    with pytest.raises(GraphError):
        g.edge_ids([(0, 2)])


# --- gradient / divergence ----------------------------------------------------------------------

def test_gradient_path():
    g = path_graph(3)
    d = gradient(fn(g, [0, 1, 3]))
    assert d.at(0, 1) == 1 and d.at(1, 2) == 2
    assert d.at(2, 1) == -2


def test_gradient_constant_zero(rng):
    g = random_graph(rng)
    assert np.all(gradient(VertexFunction.constant(g, 3.5)).values == 0)


def test_gradient_four_cycle_hand_enumeration():
    g = cycle_graph(4)
    d = gradient(fn(g, [0, 1, 0, 1]))
    assert d.at(0, 1) == 1 and d.at(1, 2) == -1 and d.at(2, 3) == 1 and d.at(3, 0) == -1


def test_divergence_single_edge():
    g = path_graph(2)
    assert list(divergence(EdgeFlow(g, np.array([1.0]))).values) == [-1.0, 1.0]


def test_divergence_of_gradient_is_laplacian():
    # net inflow convention: ∇*∇g = (D - A) g; the 3x3 Laplacian oracle gives (-1, -1, 2)
    g = path_graph(3)
    out = divergence(gradient(fn(g, [0, 1, 3]))).values
    lap = np.array([[1, -1, 0], [-1, 2, -1], [0, -1, 1]]) @ np.array([0, 1, 3])
    assert np.array_equal(out, lap)
    assert list(out) == [-1, -1, 2]


def test_divergence_zero_flow():
    g = cycle_graph(5)
    assert np.all(divergence(EdgeFlow.zero(g)).values == 0)


def test_pairing_examples():
    g = path_graph(2)
    f = EdgeFlow(g, np.array([2.0]))
    assert edge_pairing(f, f) == 4
    g = path_graph(3)
    assert edge_pairing(EdgeFlow(g, np.array([1.0, 0])), EdgeFlow(g, np.array([0, 5.0]))) == 0


def test_adjointness_ten_vertices(rng):
    g = random_graph(rng, 10, 10)
    h = fn(g, rng.normal(size=10))
    t = EdgeFlow(g, rng.normal(size=g.edge_count))
    lhs = sum((h[v] - h[u]) * t.values[i] for i, (u, v) in enumerate(g.edges))
    rhs = sum(h[x] * sum(t.at(int(y), x) for y in g.neighbors(x)) for x in range(10))
    assert edge_pairing(gradient(h), t) == pytest.approx(lhs, abs=1e-12)
    assert vertex_pairing(h, divergence(t)) == pytest.approx(rhs, abs=1e-12)
    assert lhs == pytest.approx(rhs, abs=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_adjointness_property(seed):
    r = np.random.default_rng(seed)
    g = random_graph(r)
    h = fn(g, r.normal(size=g.vertex_count))
    t = EdgeFlow(g, r.normal(size=g.edge_count))
    a, b = edge_pairing(gradient(h), t), vertex_pairing(h, divergence(t))
    scale = float(np.abs(gradient(h).values * t.values).sum()) or 1.0
    assert abs(a - b) <= 1e-10 * scale


@given(st.integers(0, 2**32 - 1))
def test_antisymmetry_and_constants(seed):
    r = np.random.default_rng(seed)
    g = random_graph(r, n_max=20)
    t = EdgeFlow(g, r.normal(size=g.edge_count))
    for u, v in g.edges:
        assert t.at(int(v), int(u)) == -t.at(int(u), int(v))
    c = VertexFunction.constant(g, r.normal())
    assert np.all(divergence(gradient(c)).values == 0)


@given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, 1.5, 2.0, 3.0, math.inf]))
def test_holder_on_flows(seed, p):
    r = np.random.default_rng(seed)
    g = random_graph(r, n_max=30)
    f = EdgeFlow(g, r.normal(size=g.edge_count))
    h = EdgeFlow(g, r.normal(size=g.edge_count))
    assert abs(edge_pairing(f, h)) <= lp_norm_edges(f, p) * lp_norm_edges(h, conjugate_exponent(p)) + 1e-12


# --- norms -------------------------------------------------------------------------------------

def test_vertex_norm_examples():
    g = path_graph(2)
    assert lp_norm_vertices(fn(g, [3, 4]), 2) == pytest.approx(5)
    assert lp_norm_vertices(fn(g, [3, -7]), math.inf) == 7
    assert lp_norm_vertices(fn(path_graph(4), [1, 1, 1, 1]), 1) == 4
    with pytest.raises(ValueError):
        lp_norm_vertices(fn(g, [1, 1]), 0.5)


def test_edge_norm_examples(rng):
    g = path_graph(3)
    d = gradient(fn(g, [0, 1, 3]))
    assert lp_norm_edges(d, 1) == 3
    assert lp_norm_edges(d, 1, restriction=[(1, 2)]) == 2
    with pytest.raises(GraphError):
        lp_norm_edges(d, 1, restriction=[(0, 2)])
    h = random_graph(rng)
    t = EdgeFlow(h, rng.normal(size=h.edge_count))
    assert lp_norm_edges(t, 2) == pytest.approx(math.sqrt(sum(x * x for x in t.values)), rel=1e-12)


def test_dp_norm_examples():
    g = path_graph(3)
    assert dp_norm(fn(g, [0, 1, 3]), 1) == 3
    assert dp_norm(VertexFunction.constant(g, -2.5), 3) == pytest.approx(2.5)
    assert dp_norm(fn(g, [1, 1, 2]), 2) == pytest.approx(math.sqrt(2))


@given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, 1.5, 2.0, 4.0]))
def test_dp_norm_is_a_norm(seed, p):
    r = np.random.default_rng(seed)
    g = random_graph(r, n_max=20)
    a, b = fn(g, r.normal(size=g.vertex_count)), fn(g, r.normal(size=g.vertex_count))
    c = float(r.normal())
    assert dp_norm(a + b, p) <= dp_norm(a, p) + dp_norm(b, p) + 1e-12
    assert dp_norm(a * c, p) == pytest.approx(abs(c) * dp_norm(a, p), rel=1e-12)


def test_mazur_map_examples():
    g = path_graph(3)
    v = fn(g, [-2, 0, 3])
    assert np.array_equal(mazur_map(v, 2).values, v.values)
    assert list(mazur_map(v, 3).values) == [-4, 0, 9]
    assert mazur_map(np.array([4.0]), 1.5)[0] == pytest.approx(2.0)
    assert mazur_map(np.array([0.0]), 1.5)[0] == 0.0
    with pytest.raises(ValueError):
        mazur_map(v, 1)


def test_mazur_maps_are_inverse():
    x = np.random.default_rng(3).normal(size=50)
    p = 3.0
    assert np.allclose(mazur_map(mazur_map(x, p), conjugate_exponent(p)), x)


def test_conjugate_exponent():
    assert conjugate_exponent(2) == 2
    assert conjugate_exponent(1) == math.inf
    assert conjugate_exponent(math.inf) == 1
    assert conjugate_exponent(3) == pytest.approx(1.5)


# --- measures ------------------------------------------------------------------------------------

def test_probability_measure_validation():
    g = path_graph(3)
    with pytest.raises(GraphError):
        ProbabilityMeasure.from_dense(g, [0.5, 0.6, 0])
    with pytest.raises(GraphError):
        ProbabilityMeasure.from_dense(g, [1.5, -0.5, 0])
    m = ProbabilityMeasure.from_dense(g, [0.25, 0.5, 0.25])
    assert m.integrate(fn(g, [4, 0, 8])) == pytest.approx(3)
    assert np.allclose(m.dense(), [0.25, 0.5, 0.25])


def test_mismatched_graphs_raise():
    a, b = path_graph(3), path_graph(3)
    with pytest.raises(GraphError):
        vertex_pairing(fn(a, [1, 2, 3]), fn(b, [1, 2, 3]))
