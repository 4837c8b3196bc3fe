"""Sampled isoperimetric ratios on windows.

Scans refute, never certify: the minimum ratio over sampled sets is an
upper bound on the best profile constant, valid only for the family that
was sampled. Sets avoid the frontier, so every boundary edge they see is
an edge of the infinite graph.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .generators import fuzz
from .graph import Graph, GraphError
from .walk import WalkKernel, spectral_norm_estimate


def edge_boundary(graph: Graph, A) -> int:
    """``|∂A|`` by scanning edges with exactly one endpoint in ``A``."""
    m = _mask(graph, A)
    e = graph.edges
    return int(np.count_nonzero(m[e[:, 0]] != m[e[:, 1]]))


def edge_boundary_by_degree(graph: Graph, A) -> int:
    """``|∂A| = sum_{x in A} deg(x) - 2 |E(A)|``."""
    m = _mask(graph, A)
    e = graph.edges
    internal = int(np.count_nonzero(m[e[:, 0]] & m[e[:, 1]]))
    return int(graph.degree[m].sum()) - 2 * internal


def _mask(graph: Graph, A) -> np.ndarray:
    A = np.asarray(A)
    if A.dtype == bool:
        return A
    m = np.zeros(graph.vertex_count, dtype=bool)
    m[A.astype(np.int64)] = True
    return m


def profile_function(mode):
    """``F(t) = t`` for ``"omega"``, ``t^(1 - 1/d)`` for a dimension ``d``."""
    if isinstance(mode, str):
        if mode == "omega":
            return lambda t: np.asarray(t, dtype=float)
        if mode.startswith("d="):
            mode = float(mode[2:])
        else:
            raise ValueError(f"unknown profile mode {mode!r}")
    d = float(mode)
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return lambda t: np.asarray(t, dtype=float) ** (1.0 - 1.0 / d)


@dataclass(frozen=True, eq=False)
class ProfileSample:
    sizes: np.ndarray
    boundaries: np.ndarray
    ratios: np.ndarray
    kinds: tuple
    sets: tuple = field(repr=False)
    mode: object = "omega"

    @property
    def min_ratio(self) -> float:
        return float(self.ratios.min()) if self.ratios.size else math.inf

    def prefix(self, k: int) -> "ProfileSample":
        return ProfileSample(self.sizes[:k], self.boundaries[:k], self.ratios[:k], self.kinds[:k],
                             self.sets[:k], self.mode)


def _ball(graph: Graph, x: int, r: int, allowed: np.ndarray) -> np.ndarray:
    d = graph.distances([x])
    return np.flatnonzero((d >= 0) & (d <= r) & allowed)


def _blob(graph: Graph, x: int, size: int, allowed: np.ndarray, rng) -> np.ndarray:
    """Connected set grown from ``x`` by adding a uniformly chosen neighbour of the set each step."""
    inside = np.zeros(graph.vertex_count, dtype=bool)
    inside[x] = True
    order = [x]
    cand: list[int] = []
    seen = {x}
    for y in graph.neighbors(x):
        if allowed[y]:
            cand.append(int(y))
            seen.add(int(y))
    while len(order) < size and cand:
        j = int(rng.integers(len(cand)))
        v = cand[j]
        cand[j] = cand[-1]
        cand.pop()
        inside[v] = True
        order.append(v)
        for y in graph.neighbors(v):
            y = int(y)
            if allowed[y] and y not in seen:
                seen.add(y)
                cand.append(y)
    return np.array(sorted(order), dtype=np.int64)


def _half_cuts(graph: Graph, allowed: np.ndarray, cap: int) -> list[np.ndarray]:
    box = graph.box
    if box is None and graph.parts is None:
        return []
    boxes = [(box, 0)] if box is not None else [
        (p.box, int(off)) for p, off in zip(graph.parts, graph.part_offsets[:-1]) if p.box is not None]
    out = []
    for b, off in boxes:
        coords = b.coords(np.arange(b.size))
        for ax in range(b.dim):
            for c in range(-b.radius, b.radius):
                ids = np.flatnonzero(coords[:, ax] <= c) + off
                ids = ids[allowed[ids]]
                if 0 < len(ids) <= cap:
                    out.append(ids)
    return out


def profile_scan(graph: Graph, mode="omega", samples: int = 200, seed: int = 0,
                 max_size: int | None = None) -> ProfileSample:
    """Ratios ``|∂A| / F(|A|)`` over balls, random connected blobs and coordinate half-cuts.

    Sizes stay at most half the non-frontier vertex count (and ``max_size``
    when given). ``samples`` random sets are drawn, split between balls and
    blobs; half-cuts of grid windows are appended deterministically.
    """
    F = profile_function(mode)
    allowed = ~graph.frontier_mask
    free = np.flatnonzero(allowed)
    cap = len(free) // 2
    if max_size is not None:
        cap = min(cap, int(max_size))
    if cap < 1:
        raise GraphError("too few non-frontier vertices to sample sets")
    rng = np.random.default_rng(seed)
    sets, kinds = [], []
    fd = graph.frontier_distance
    for i in range(samples):
        x = int(free[rng.integers(len(free))])
        if i % 2 == 0:
            rmax = int(min(fd[x] - 1, graph.vertex_count)) if math.isfinite(fd[x]) else int(
                graph.distances([x]).max())
            r = int(rng.integers(0, max(rmax, 0) + 1))
            A = _ball(graph, x, r, allowed)
            while len(A) > cap and r > 0:
                r -= 1
                A = _ball(graph, x, r, allowed)
            kind = "ball"
        else:
            size = int(np.exp(rng.uniform(0, np.log(cap)))) if cap > 1 else 1
            A = _blob(graph, x, max(1, min(size, cap)), allowed, rng)
            kind = "blob"
        if 0 < len(A) <= cap:
            sets.append(A)
            kinds.append(kind)
    for A in _half_cuts(graph, allowed, cap):
        sets.append(A)
        kinds.append("half-cut")
    sizes = np.array([len(A) for A in sets], dtype=np.int64)
    bnd = np.array([edge_boundary(graph, A) for A in sets], dtype=np.int64)
    ratios = bnd / F(sizes)
    return ProfileSample(sizes, bnd, ratios, tuple(kinds), tuple(sets), mode)


@dataclass(frozen=True)
class FuzzAmplification:
    before: float
    after: float
    n: int
    sets: int

    def __iter__(self):
        return iter((self.before, self.after))


def fuzz_amplification(graph: Graph, n: int | None = None, samples: int = 200, seed: int = 0,
                       max_edges: float = 5e7) -> FuzzAmplification:
    """Strong-profile minimum on sampled sets before and after ``fuzz(graph, n)``.

    ``n`` defaults to ``ceil(1/c)`` with ``c`` the minimum before. The same
    sets are measured in both graphs.
    """
    scan = profile_scan(graph, "omega", samples, seed)
    c = scan.min_ratio
    if n is None:
        if not c > 0:
            raise GraphError("sampled strong-profile ratio is zero; no amplification possible")
        n = max(1, math.ceil(1.0 / c))
    fg = fuzz(graph, n, max_edges=max_edges)
    bnd = np.array([edge_boundary(fg, A) for A in scan.sets], dtype=float)
    after = float((bnd / scan.sizes).min())
    return FuzzAmplification(c, after, int(n), len(scan.sets))


def is_omega_surrogate(graph: Graph, tol: float = 1e-10) -> float:
    """Norm of the killed walk operator; values bounded away from 1 are IS_ω evidence."""
    if not graph.has_frontier:
        raise GraphError("the surrogate needs a frontier")
    return spectral_norm_estimate(WalkKernel(graph, 0.0, dirichlet=True), tol=tol)
