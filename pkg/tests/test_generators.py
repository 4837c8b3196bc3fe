import itertools

import networkx as nx
import numpy as np
import pytest

from graphlp.generators import (WindowSpec, bfs_spanning_tree, cayley_ball, complete_graph, fuzz,
                                glued_double_grid, grid_window, integer_generators, lamplighter_generators,
                                path_graph, stitch, torus, tree_ball)
from graphlp.graph import Graph, GraphError, VertexFunction


def to_nx(g: Graph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(range(g.vertex_count))
    h.add_edges_from(map(tuple, g.edges.tolist()))
    return h


def revalidate(g: Graph) -> Graph:
    return Graph(np.array(g.indptr), np.array(g.indices), root=g.root, frontier=g.frontier_mask)


def test_grid_window_d1():
    g = grid_window(WindowSpec(1, 2))
    assert g.vertex_count == 5 and g.edge_count == 4
    assert sorted(g.vertex_label(v) for v in g.frontier) == [(-2,), (2,)]
    assert g.vertex_label(g.root) == (0,)


def test_grid_window_d2_counts_and_degrees():
    g = grid_window(WindowSpec(2, 1))
    assert g.vertex_count == 9 and g.edge_count == 12
    g = grid_window(WindowSpec(3, 3))
    interior = ~g.frontier_mask
    assert np.all(g.degree[interior] == 6)
    assert np.all(g.degree[g.frontier_mask] < 6)
    revalidate(g)


def test_glued_double_grid_d1():
    g = glued_double_grid(WindowSpec(1, 1))
    assert g.vertex_count == 6 and g.edge_count == 5
    assert nx.is_connected(to_nx(g))
    assert g.vertex_label(g.root) == ((0,), 1)
    labels = {g.vertex_label(v) for v in range(6)}
    assert ((0,), 2) in labels


def test_glued_equals_explicit_stitch():
    spec = WindowSpec(2, 2)
    a, b = grid_window(spec), grid_window(spec)
    s = stitch([a, b], [((0, a.root), (1, b.root))])
    g = glued_double_grid(spec)
    assert np.array_equal(s.edges, g.edges)
    assert nx.is_isomorphic(to_nx(s), to_nx(g))
    revalidate(g)


def test_stitch_bridge_rows_stay_sorted():
    # bridges landing in empty and adjacent rows
    parts = [Graph.from_edges(1, []) for _ in range(3)] + [path_graph(3)]
    s = stitch(parts, [((0, 0), (1, 0)), ((1, 0), (2, 0)), ((2, 0), (3, 1)), ((0, 0), (3, 0))])
    revalidate(s)
    assert s.edge_count == 6


def test_stitch_examples_and_errors():
    one = Graph.from_edges(1, [])
    s = stitch([one, Graph.from_edges(1, [])], [((0, 0), (1, 0))])
    assert s.vertex_count == 2 and s.edge_count == 1
    parts = [grid_window(WindowSpec(2, 1)) for _ in range(3)]
    chain = stitch(parts, [((0, 8), (1, 0)), ((1, 8), (2, 0))])
    assert nx.is_connected(to_nx(chain)) and len(chain.bridges) == 2
    with pytest.raises(GraphError):
        stitch(parts, [((0, 8), (1, 0))])
    with pytest.raises(GraphError):
        stitch(parts[:2], [((0, 9), (1, 0))])
    with pytest.raises(GraphError):
        stitch(parts, [((0, 8), (1, 0)), ((1, 8), (2, 0))], k=1)


def test_stitch_restriction_round_trip():
    parts = [grid_window(WindowSpec(2, 2)), tree_ball(2, 2)]
    s = stitch(parts, [((0, 3), (1, 5))])
    v = np.random.default_rng(1).normal(size=s.vertex_count)
    off = s.part_offsets
    pieces = [v[off[i]:off[i + 1]] for i in range(2)]
    assert np.array_equal(np.concatenate(pieces), v)
    assert s.part_of(int(off[1])) == 1 and s.part_of(0) == 0
    VertexFunction(parts[1], pieces[1])


def test_tree_ball_counts():
    t = tree_ball(2, 1)
    assert t.vertex_count == 4 and t.edge_count == 3 and len(t.frontier) == 3
    t = tree_ball(2, 2)
    assert t.vertex_count == 10
    assert np.all(t.degree[~t.frontier_mask] == 3)
    assert nx.is_tree(to_nx(tree_ball(3, 3)))


def test_torus_regular_no_frontier():
    t = torus(2, 2)
    assert t.vertex_count == 25 and t.is_regular and t.max_degree == 4 and not t.has_frontier


def test_fuzz_examples_and_monotonicity():
    p = path_graph(4)
    f = fuzz(p, 2)
    assert {tuple(e) for e in f.edges.tolist()} == {(0, 1), (1, 2), (2, 3), (0, 2), (1, 3)}
    g = grid_window(WindowSpec(2, 2))
    assert np.array_equal(fuzz(g, 1).edges, g.edges)
    prev = set(map(tuple, g.edges.tolist()))
    for n in (2, 3):
        cur = set(map(tuple, fuzz(g, n).edges.tolist()))
        assert prev <= cur
        prev = cur
    # BFS oracle: edge iff 1 <= dist <= 3
    d = dict(nx.all_pairs_shortest_path_length(to_nx(g)))
    expect = {(u, v) for u in d for v in d[u] if u < v and d[u][v] <= 3}
    assert cur == expect
    with pytest.raises(GraphError):
        fuzz(g, 3, max_edges=10)


def test_cayley_ball_integer_lattices():
    z = cayley_ball(*integer_generators(1), 3)
    assert z.vertex_count == 7 and z.edge_count == 6 and len(z.frontier) == 2
    z2 = cayley_ball(*integer_generators(2), 2)
    assert z2.vertex_count == 13


def lamplighter_bruteforce(radius):
    identity, gens = lamplighter_generators()
    seen = set()
    for r in range(radius + 1):
        for word in itertools.product(gens, repeat=r):
            x = identity
            for s in word:
                x = s(x)
            seen.add(x)
    return len(seen)


def test_cayley_ball_lamplighter_against_word_enumeration():
    g = cayley_ball(*lamplighter_generators(), 4)
    assert g.vertex_count == lamplighter_bruteforce(4)


def test_cayley_rejects_non_symmetric_generators():
    with pytest.raises(GraphError):
        cayley_ball(0, [lambda x: x + 1], 2)


def test_bfs_spanning_tree():
    g = grid_window(WindowSpec(2, 3))
    t = bfs_spanning_tree(g)
    assert t.edge_count == g.vertex_count - 1
    assert nx.is_tree(to_nx(t))
    assert np.array_equal(t.root_distance, g.root_distance)


def test_builders_pass_validation():
    for g in (complete_graph(5), torus(3, 1), tree_ball(2, 3), glued_double_grid(WindowSpec(3, 2))):
        revalidate(g)
