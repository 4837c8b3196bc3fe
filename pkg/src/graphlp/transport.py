"""Transport patterns: edge flows whose divergence is a difference of measures.

Divergence is net inflow, so a pattern from ``ξ`` to ``φ`` satisfies
``∇*τ = ξ - φ``: its flow runs from ``φ``'s side into ``ξ``'s side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import (EdgeFlow, GraphError, ProbabilityMeasure, VertexFunction, _lp,
                    conjugate_exponent, divergence, edge_pairing, gradient, lp_norm_edges)
from .walk import ExactnessWarning, WalkKernel, _measures, exactness_radius

IDENTITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class TransportPattern:
    flow: EdgeFlow
    source: ProbabilityMeasure
    target: ProbabilityMeasure

    def __post_init__(self):
        if not (self.flow.graph is self.source.graph is self.target.graph):
            raise GraphError("flow and measures live on different graphs")
        err = self.identity_error()
        if err > IDENTITY_TOL:
            raise GraphError(f"divergence identity violated by {err:.3e}")

    def identity_error(self) -> float:
        """``max |∇*τ - (ξ - φ)|``."""
        d = divergence(self.flow).values
        return float(np.max(np.abs(d - (self.source.dense() - self.target.dense()))))


def path_transport(graph, x: int, y: int) -> TransportPattern:
    """Unit flow along a shortest path, ``∇*τ = δ_x - δ_y``."""
    dist = graph.distances([x])
    if dist[y] < 0:
        raise GraphError("vertices are not connected")
    vals = np.zeros(graph.edge_count)
    cur = y
    # walk from y down the distance gradient towards x; flow points along the walk
    while cur != x:
        nb = graph.neighbors(cur)
        nxt = int(nb[np.argmax(dist[nb] == dist[cur] - 1)])
        e = graph.edge_ids([(cur, nxt)])[0]
        vals[e] += 1.0 if cur < nxt else -1.0
        cur = nxt
    return TransportPattern(EdgeFlow(graph, vals), ProbabilityMeasure.delta(graph, x),
                            ProbabilityMeasure.delta(graph, y))


def _walk_flow(k: WalkKernel, m: np.ndarray) -> np.ndarray:
    """Antisymmetrised flow sending ``(1-a) m(y)/deg(y)`` along every edge out of ``y``."""
    g = k.graph
    out = (1.0 - k.laziness) * m / g.degree
    if k.dirichlet:
        out = out.copy()
        out[g.frontier_mask] = 0.0
    e = g.edges
    return out[e[:, 0]] - out[e[:, 1]]


def walk_edge_measure(k: WalkKernel, x: int, i: int) -> EdgeFlow:
    """Edge measure of step ``i`` of the walk from ``x``; its divergence is ``P^(i+1)_x - P^(i)_x``."""
    if i < 0:
        raise ValueError("i must be >= 0")
    for n, m in _measures(k, x, i):
        if n == i:
            return EdgeFlow(k.graph, _walk_flow(k, m))


def walk_edge_mass(k: WalkKernel, x: int, i: int) -> float:
    """Total unsigned mass carried along oriented edges at step ``i`` (before cancellation)."""
    for n, m in _measures(k, x, i):
        if n == i:
            moving = m.copy()
            if k.dirichlet:
                moving[k.graph.frontier_mask] = 0.0
            return float((1.0 - k.laziness) * moving.sum())


def walk_transport(k: WalkKernel, x: int, n: int, kk: int) -> TransportPattern:
    """Transport from ``P^(n)_x`` to ``P^(n+kk)_x`` by continuing the walk ``kk`` steps."""
    if n < 0 or kk < 0:
        raise ValueError("n and kk must be >= 0")
    acc = np.zeros(k.graph.vertex_count)
    src = tgt = None
    for i, m in _measures(k, x, n + kk):
        if i == n:
            src = m.copy()
        if n <= i < n + kk:
            acc += m
        if i == n + kk:
            tgt = m.copy()
    flow = EdgeFlow(k.graph, -_walk_flow(k, acc))
    return TransportPattern(flow, ProbabilityMeasure.from_dense(k.graph, src),
                            ProbabilityMeasure.from_dense(k.graph, tgt))


def _degree_factor(k: WalkKernel, p: float) -> float:
    # |S|^{-1/p} with |S| replaced by the smallest degree: keeps the bound valid off regular graphs
    if math.isinf(p):
        return 1.0 / k.graph.min_degree
    return k.graph.min_degree ** (-1.0 / p)


def transport_norm_bound(k: WalkKernel, x: int, n: int, kk: int, p_prime: float) -> tuple[float, float]:
    """``(||τ||_{p'}, |S|^{-1/p} sum_{i=n}^{n+kk-1} ||P^(i)_x||_{p'})``."""
    if kk == 0:
        return 0.0, 0.0
    p = conjugate_exponent(p_prime)
    tau = walk_transport(k, x, n, kk)
    norms = [_lp(m, p_prime) for i, m in _measures(k, x, n + kk - 1) if i >= n]
    return lp_norm_edges(tau.flow, p_prime), _degree_factor(k, p) * float(np.sum(norms))


def holder_gap(g: VertexFunction, t: TransportPattern, p: float) -> tuple[float, float]:
    """``(|∫g dξ - ∫g dφ|, ||∇g||_p ||τ||_{p'})``."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    lhs = abs(t.source.integrate(g) - t.target.integrate(g))
    rhs = lp_norm_edges(gradient(g), p) * lp_norm_edges(t.flow, conjugate_exponent(p))
    return lhs, rhs


def pairing_identity(g: VertexFunction, t: TransportPattern) -> tuple[float, float]:
    """Both sides of ``∫g dξ - ∫g dφ = <∇g, τ>``."""
    return t.source.integrate(g) - t.target.integrate(g), edge_pairing(gradient(g), t.flow)


@dataclass(frozen=True)
class TailReport:
    sup_norms: np.ndarray
    tails: np.ndarray
    p_prime: float
    horizon: int


def tail_condition(k: WalkKernel, x: int, p_prime: float, N: int, horizon: int) -> TailReport:
    """``sup_{1<=kk<=horizon} ||τ_{P^(n), P^(n+kk)}||_{p'}`` for ``n = 0..N``.

    ``tails[n]`` is ``sum_{i=n}^{N+horizon-1} ||P^(i)_x||_{p'}``, which
    dominates ``sup_norms[n]``.
    """
    if horizon == 0:
        return TailReport(np.zeros(N + 1), np.zeros(N + 1), p_prime, 0)
    last = N + horizon
    r = exactness_radius(k.graph, x)
    if last >= r:
        import warnings
        warnings.warn(f"N + horizon = {last} reaches the frontier (distance {r:g})",
                      ExactnessWarning, stacklevel=2)
    flows, norms = [], []
    for i, m in _measures(k, x, last - 1):
        flows.append(_walk_flow(k, m))
        norms.append(_lp(m, p_prime))
    flows = np.array(flows)
    sups = np.zeros(N + 1)
    for n in range(N + 1):
        run = np.zeros(flows.shape[1])
        best = 0.0
        for kk in range(1, horizon + 1):
            run += flows[n + kk - 1]
            best = max(best, _lp(run, p_prime))
        sups[n] = best
    norms = np.array(norms)
    tails = np.cumsum(norms[::-1])[::-1][: N + 1]
    return TailReport(sups, tails, p_prime, horizon)
