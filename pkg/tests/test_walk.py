import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from graphlp.generators import (WindowSpec, complete_bipartite, complete_graph, cycle_graph, grid_window,
                                path_graph, torus, tree_ball)
from graphlp.graph import Graph, GraphError, ProbabilityMeasure, VertexFunction, vertex_pairing
from graphlp.walk import (ExactnessWarning, SupPoint, WalkKernel, convolve, fit_decay, green_partial_sum,
                          interpolation_bound, n_step, norm_sequence, spectral_norm_estimate, step,
                          sup_sequence)

from conftest import random_graph


def dense_P(g: Graph, alpha=0.0) -> np.ndarray:
    A = g.adjacency.toarray()
    P = A / A.sum(axis=1, keepdims=True)
    return alpha * np.eye(g.vertex_count) + (1 - alpha) * P


def test_step_examples():
    c = cycle_graph(4)
    k = WalkKernel(c)
    assert np.allclose(step(k, ProbabilityMeasure.delta(c, 0)).dense(), [0, 0.5, 0, 0.5])
    p = path_graph(3)
    assert np.allclose(step(WalkKernel(p), ProbabilityMeasure.delta(p, 1)).dense(), [0.5, 0, 0.5])
    m = ProbabilityMeasure.from_dense(c, [0.1, 0.2, 0.3, 0.4])
    lazy = step(WalkKernel(c, 0.5), m).dense()
    assert np.allclose(lazy, 0.5 * m.dense() + 0.5 * step(k, m).dense())


def test_n_step_examples():
    g = grid_window(WindowSpec(1, 10))
    d = n_step(WalkKernel(g), g.root, 2)
    lab = {g.vertex_label(v)[0]: d.dense()[v] for v in range(g.vertex_count) if d.dense()[v] > 0}
    assert lab == {-2: 0.25, 0: 0.5, 2: 0.25}
    assert d.exact
    assert np.array_equal(n_step(WalkKernel(g), 3, 0).dense(), np.eye(g.vertex_count)[3])


def test_truncation_exactness_between_windows():
    small, big = grid_window(WindowSpec(2, 6)), grid_window(WindowSpec(2, 11))
    for n in range(6):
        a = n_step(WalkKernel(small), small.root, n).dense()
        b = n_step(WalkKernel(big), big.root, n).dense()
        lab_b = {big.vertex_label(v): b[v] for v in np.flatnonzero(b)}
        lab_a = {small.vertex_label(v): a[v] for v in np.flatnonzero(a)}
        assert lab_a.keys() == lab_b.keys()
        assert max(abs(lab_a[key] - lab_b[key]) for key in lab_a) <= 1e-14


def test_box_fast_path_matches_sparse_path():
    box = grid_window(WindowSpec(3, 4))
    sparse = Graph(box.indptr, box.indices, root=box.root, frontier=box.frontier)
    for alpha, dirichlet in ((0.0, False), (0.5, True), (0.3, False)):
        a = n_step(WalkKernel(box, alpha, dirichlet), 5, 9).dense()
        b = n_step(WalkKernel(sparse, alpha, dirichlet), 5, 9).dense()
        assert np.allclose(a, b, atol=1e-15)


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.0, 0.5]), st.booleans())
def test_mass_support_and_dense_matrix_oracle(seed, alpha, dirichlet):
    r = np.random.default_rng(seed)
    g = random_graph(r, n_max=30, frontier_frac=0.2 if dirichlet else 0.0)
    k = WalkKernel(g, alpha, dirichlet)
    x = int(r.integers(g.vertex_count))
    n = int(r.integers(0, 8))
    m = n_step(k, x, n).dense()
    assert abs(m.sum() - 1) <= 1e-12
    assert np.all(m[g.distances([x]) > n] == 0)
    P = dense_P(g, alpha)
    if dirichlet:
        P[g.frontier_mask] = np.eye(g.vertex_count)[g.frontier_mask]
    assert np.allclose(m, np.linalg.matrix_power(P, n)[x], atol=1e-14)


@given(st.integers(0, 2**32 - 1))
def test_convolution_adjoint_on_irregular_graphs(seed):
    # ⟨P^(n)_x, g⟩ computed forward on measures equals (P^n g)(x) computed on functions
    r = np.random.default_rng(seed)
    g = random_graph(r, n_max=30)
    k = WalkKernel(g, float(r.choice([0.0, 0.5])))
    h = VertexFunction(g, r.normal(size=g.vertex_count))
    n = int(r.integers(0, 7))
    x = int(r.integers(g.vertex_count))
    forward = float(n_step(k, x, n).dense() @ h.values)
    assert forward == pytest.approx(convolve(k, h, n).values[x], abs=1e-12)


def test_convolve_examples():
    c = cycle_graph(4)
    k = WalkKernel(c)
    h = VertexFunction(c, np.array([1.0, 0, 0, 0]))
    assert np.allclose(convolve(k, h, 1).values, [0, 0.5, 0, 0.5])
    assert np.array_equal(convolve(k, h, 0).values, h.values)
    for alpha in (0.0, 0.25, 0.5):
        const = VertexFunction.constant(tree_ball(2, 3), 2.5)
        assert np.allclose(convolve(WalkKernel(const.graph, alpha), const, 5).values, 2.5)


def test_norm_sequence_examples():
    c = cycle_graph(4)
    s = norm_sequence(WalkKernel(c), 0, 2.0, 3)
    assert s.norms[0] == 1 and s.norms[1] == pytest.approx(1 / math.sqrt(2))
    assert np.allclose(s.partial_sums, np.cumsum(s.norms))
    g = grid_window(WindowSpec(5, 6))
    s = norm_sequence(WalkKernel(g), g.root, math.inf, 5)
    # periodic walk: sup norms pair up across parities, so only nonincreasing
    assert np.all(np.diff(s.norms) <= 1e-15)
    lazy = norm_sequence(WalkKernel(g, 0.5), g.root, math.inf, 5)
    assert np.all(np.diff(lazy.norms) < 0)
    with pytest.warns(ExactnessWarning):
        norm_sequence(WalkKernel(g), g.root, 2.0, 6)


def test_interpolation_bound_examples():
    c = cycle_graph(4)
    a, b = interpolation_bound(WalkKernel(c), 0, 2.0, 1)
    assert a == pytest.approx(b) == pytest.approx(1 / math.sqrt(2))
    a, b = interpolation_bound(WalkKernel(c), 0, 3.0, 0)
    assert a == b == 1
    g = grid_window(WindowSpec(2, 10))
    a, b = interpolation_bound(WalkKernel(g), g.root, 2.0, 6)
    assert a < b


@given(st.integers(0, 2**32 - 1), st.sampled_from([1.5, 2.0, 3.0, 6.0]))
def test_interpolation_bound_property(seed, pp):
    r = np.random.default_rng(seed)
    g = random_graph(r, n_max=30)
    a, b = interpolation_bound(WalkKernel(g), 0, pp, int(r.integers(0, 10)))
    assert a <= b + 1e-12


def test_fit_decay_pure_power_law():
    pts = [(n, 3.0 * n ** -2.5) for n in range(10, 30, 2)]
    fit = fit_decay(pts)
    assert abs(fit.exponent + 2.5) <= 1e-9 and fit.constant == pytest.approx(3.0)
    with pytest.raises(ValueError):
        fit_decay(pts[:4])


def test_fit_decay_z1_local_clt():
    g = grid_window(WindowSpec(1, 40))
    seq = sup_sequence(WalkKernel(g), g.root, range(10, 40, 2))
    assert all(p.certified for p in seq)
    fit = fit_decay(seq)
    assert abs(fit.exponent + 0.5) <= 0.1 and fit.certified


def test_sup_sequence_certificate():
    g = grid_window(WindowSpec(1, 5))
    seq = sup_sequence(WalkKernel(g), g.root, [2, 8, 12])
    assert [p.certified for p in seq] == [True, True, False]
    fit = fit_decay([SupPoint(n, 1.0 / n, 0, n < 5) for n in range(2, 10)])
    assert not fit.certified


def test_spectral_norm_path_oracle():
    # frontier at ±L leaves 2L-1 interior vertices: eigenvalue cos(π / 2L)
    prev = 0
    for L in (3, 6, 12):
        g = grid_window(WindowSpec(1, L))
        est = spectral_norm_estimate(WalkKernel(g, 0.0, True))
        assert est == pytest.approx(math.cos(math.pi / (2 * L)), abs=1e-6)
        assert prev < est < 1
        prev = est


def test_spectral_norm_tree_and_complete():
    ests = [spectral_norm_estimate(WalkKernel(tree_ball(2, d), 0.0, True)) for d in (4, 6, 8, 10)]
    assert all(a < b for a, b in zip(ests, ests[1:]))
    assert ests[-1] < 2 * math.sqrt(2) / 3
    assert 2 * math.sqrt(2) / 3 - ests[-1] < 0.05
    assert spectral_norm_estimate(WalkKernel(complete_graph(5))) == 1.0


def test_spectral_norm_bipartite_eigen_oracle():
    g = complete_bipartite(3, 4, frontier=[4, 5])
    est = spectral_norm_estimate(WalkKernel(g, 0.0, True))
    P = dense_P(g)
    keep = ~g.frontier_mask
    assert est == pytest.approx(np.linalg.norm(P[np.ix_(keep, keep)], 2), abs=1e-8)
    assert 0 < est < 1


def test_green_sum_examples():
    g = grid_window(WindowSpec(1, 8))
    k = WalkKernel(g, 0.0, True)
    zero = green_partial_sum(k, VertexFunction(g, np.zeros(g.vertex_count)))
    assert np.all(zero.values.values == 0) and zero.converged
    gs = green_partial_sum(k, VertexFunction.delta(g, g.root))
    assert gs.converged and not gs.diverged
    P = dense_P(g)
    keep = ~g.frontier_mask
    Q = P[np.ix_(keep, keep)]
    u = np.linalg.solve(np.eye(keep.sum()) - Q, np.eye(g.vertex_count)[g.root][keep])
    assert np.allclose(gs.values.values[keep], u, atol=1e-10)
    t = torus(2, 3)
    div = green_partial_sum(WalkKernel(t, 0.5), VertexFunction.constant(t, 1.0), horizon=20, max_iter=500)
    assert div.diverged and not div.converged


def test_kernel_rejects_bad_laziness_and_foreign_operands():
    g = path_graph(3)
    with pytest.raises(ValueError):
        WalkKernel(g, 1.0)
    with pytest.raises(GraphError):
        convolve(WalkKernel(g), VertexFunction.constant(path_graph(3), 1.0), 1)


def test_lazy_harmonic_invariance():
    g = tree_ball(2, 3)
    h = VertexFunction(g, np.random.default_rng(0).normal(size=g.vertex_count))
    a = h.values - WalkKernel(g, 0.0).apply(h.values)
    b = h.values - WalkKernel(g, 0.5).apply(h.values)
    assert np.allclose(b, 0.5 * a)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        vertex_pairing(h, h)
