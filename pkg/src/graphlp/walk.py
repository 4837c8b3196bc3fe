"""Simple and lazy random walks: exact n-step distributions by sparse iteration.

The transition operator of a :class:`WalkKernel` is

    P_a = a * I + (1 - a) * D^{-1} A

with ``a`` the laziness. With ``dirichlet=True`` frontier vertices are
absorbing: they keep their value (as functions) or their mass (as measures).
On functions that vanish on the frontier this is the killed walk, so Green
sums and spectral estimates read the interior block of the operator.

Box windows of ``Z^d`` are iterated with a dense stencil instead of a sparse
matrix; measures only touch the sub-box their support can reach.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .graph import (Box, Graph, GraphError, ProbabilityMeasure, VertexFunction, _lp,
                    conjugate_exponent)


class ExactnessWarning(UserWarning):
    """A quantity was requested beyond the range certified exact for the infinite graph."""


@dataclass(frozen=True, eq=False)
class WalkKernel:
    graph: Graph
    laziness: float = 0.0
    dirichlet: bool = False

    def __post_init__(self):
        if not 0.0 <= self.laziness < 1.0:
            raise ValueError(f"laziness must lie in [0, 1), got {self.laziness}")

    def _check(self, obj):
        if obj.graph is not self.graph:
            raise GraphError("operand lives on a different graph than the kernel")

    # one step on dense vectors ---------------------------------------------------

    def apply(self, values: np.ndarray, adjoint: bool = False) -> np.ndarray:
        """One step: ``P g`` for functions, or ``P^T m`` for measures (``adjoint=True``)."""
        g = self.graph
        a = self.laziness
        deg = g.degree
        fr = g.frontier_mask
        v = np.asarray(values, dtype=float)
        if not adjoint:
            out = g.neighbor_sum(v) / deg
            if a:
                out = a * v + (1.0 - a) * out
            if self.dirichlet:
                out[fr] = v[fr]
            return out
        u = v / deg
        if self.dirichlet:
            u[fr] = 0.0
        out = g.neighbor_sum(u)
        if a != 0.0:
            out *= 1.0 - a
            out += a * v
        if self.dirichlet:
            out[fr] += (1.0 - a) * v[fr]
        return out

    def apply_killed(self, values: np.ndarray) -> np.ndarray:
        """Interior block of the operator: frontier entries are read and written as zero."""
        v = np.array(values, dtype=float)
        fr = self.graph.frontier_mask
        v[fr] = 0.0
        out = self.graph.neighbor_sum(v) / self.graph.degree
        if self.laziness:
            out = self.laziness * v + (1.0 - self.laziness) * out
        out[fr] = 0.0
        return out

    def apply_killed_adjoint(self, values: np.ndarray) -> np.ndarray:
        v = np.array(values, dtype=float)
        fr = self.graph.frontier_mask
        v[fr] = 0.0
        out = self.graph.neighbor_sum(v / self.graph.degree)
        if self.laziness:
            out = self.laziness * v + (1.0 - self.laziness) * out
        out[fr] = 0.0
        return out


def _measures(k: WalkKernel, x: int, n_max: int) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(n, P^(n)_x)`` for ``n = 0..n_max`` as dense vectors.

    The yielded array is reused between iterations; copy it to keep it.
    """
    g = k.graph
    if not 0 <= x < g.vertex_count:
        raise GraphError(f"{x} is not a vertex")
    m = np.zeros(g.vertex_count)
    m[x] = 1.0
    yield 0, m
    if g.box is None:
        for n in range(1, n_max + 1):
            m = k.apply(m, adjoint=True)
            yield n, m
        return
    box = g.box
    mm = m.reshape(box.shape)
    c = np.unravel_index(x, box.shape)
    deg = box.degree_nd
    fr = box.frontier_nd
    a = k.laziness
    for n in range(1, n_max + 1):
        sl = tuple(slice(max(ci - n, 0), min(ci + n + 1, box.side)) for ci in c)
        sub = mm[sl]
        u = sub / deg[sl]
        if k.dirichlet:
            u[fr[sl]] = 0.0
        new = Box.neighbor_sum(u)
        if a != 0.0:
            new *= 1.0 - a
            new += a * sub
        if k.dirichlet:
            f = fr[sl]
            new[f] += (1.0 - a) * sub[f]
        mm[sl] = new
        yield n, m


def exactness_radius(graph: Graph, x: int) -> float:
    """Distance from ``x`` to the frontier (``inf`` without a frontier)."""
    return float(graph.frontier_distance[x])


@dataclass(frozen=True, eq=False)
class WalkDistribution:
    measure: ProbabilityMeasure
    steps: int
    start: int
    exactness_radius: float

    @property
    def exact(self) -> bool:
        """True when the window is known to agree with the infinite graph."""
        return self.steps < self.exactness_radius

    def dense(self) -> np.ndarray:
        return self.measure.dense()


def n_step(k: WalkKernel, x: int, n: int) -> WalkDistribution:
    if n < 0:
        raise ValueError("n must be >= 0")
    for i, m in _measures(k, x, n):
        if i == n:
            meas = ProbabilityMeasure.from_dense(k.graph, m)
    return WalkDistribution(meas, n, x, exactness_radius(k.graph, x))


def step(k: WalkKernel, m: ProbabilityMeasure) -> ProbabilityMeasure:
    k._check(m)
    return ProbabilityMeasure.from_dense(k.graph, k.apply(m.dense(), adjoint=True))


def convolve(k: WalkKernel, g: VertexFunction, n: int) -> VertexFunction:
    """``(P^(n) * g)(x) = sum_y g(y) P^(n)_x(y)`` for every ``x``."""
    k._check(g)
    if n < 0:
        raise ValueError("n must be >= 0")
    v = g.values
    for _ in range(n):
        v = k.apply(v)
    return VertexFunction(k.graph, v)


@dataclass(frozen=True)
class NormSequence:
    norms: np.ndarray
    partial_sums: np.ndarray
    p_prime: float
    exactness_radius: float


def norm_sequence(k: WalkKernel, x: int, p_prime: float, N: int) -> NormSequence:
    """``||P^(i)_x||_{p'}`` for ``i = 0..N`` and their partial sums."""
    r = exactness_radius(k.graph, x)
    if N >= r:
        warnings.warn(f"N={N} reaches the frontier (distance {r:g}); later terms are window effects",
                      ExactnessWarning, stacklevel=2)
    norms = np.array([_lp(m, p_prime) for _, m in _measures(k, x, N)])
    return NormSequence(norms, np.cumsum(norms), p_prime, r)


def interpolation_bound(k: WalkKernel, x: int, p_prime: float, n: int) -> tuple[float, float]:
    """``(||P^(n)_x||_{p'}, ||P^(n)_x||_inf^(1/p))``; the first never exceeds the second."""
    if not 1 < p_prime < math.inf:
        raise ValueError("interpolation bound needs 1 < p' < inf")
    p = conjugate_exponent(p_prime)
    m = n_step(k, x, n).dense()
    return _lp(m, p_prime), float(np.max(m)) ** (1.0 / p)


@dataclass(frozen=True)
class SupPoint:
    n: int
    sup: float
    argmax: int
    certified: bool


def sup_sequence(k: WalkKernel, x: int, ns: Sequence[int]) -> list[SupPoint]:
    """``sup_y P^(n)_x(y)`` for the requested ``n``.

    A value is certified when the maximiser ``y`` satisfies
    ``n < d(x, frontier) + d(y, frontier)``: no walk of length ``n`` from
    ``x`` to ``y`` can leave a frontier vertex, so the value equals the one
    on the infinite graph.
    """
    want = sorted(set(int(n) for n in ns))
    if not want:
        return []
    fd = k.graph.frontier_distance
    out = []
    for n, m in _measures(k, x, want[-1]):
        if n in want:
            y = int(np.argmax(m))
            out.append(SupPoint(n, float(m[y]), y, bool(n < fd[x] + fd[y])))
    return out


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit ``log sup P^(n) = log K + exponent * log n``."""

    exponent: float
    constant: float
    window: tuple[int, int]
    residual: float
    points: int
    certified: bool


def fit_decay(seq, window: tuple[int, int] | None = None, min_points: int = 5) -> DecayFit:
    """Fit a power law to ``(n, sup)`` pairs (or :class:`SupPoint` items) inside ``window``.

    ``certified`` is False when any point used is not certified exact;
    plain ``(n, value)`` pairs are taken as certified.
    """
    pts = []
    for item in seq:
        if isinstance(item, SupPoint):
            pts.append((item.n, item.sup, item.certified))
        else:
            pts.append((int(item[0]), float(item[1]), True))
    if window is not None:
        n0, n1 = window
        pts = [p for p in pts if n0 <= p[0] <= n1]
    pts = [p for p in pts if p[0] > 0 and p[1] > 0]
    if len(pts) < min_points:
        raise ValueError(f"decay fit needs at least {min_points} points in the window, got {len(pts)}")
    n = np.array([p[0] for p in pts], dtype=float)
    s = np.array([p[1] for p in pts], dtype=float)
    X = np.stack([np.ones_like(n), np.log(n)], axis=1)
    coef, *_ = np.linalg.lstsq(X, np.log(s), rcond=None)
    res = np.log(s) - X @ coef
    return DecayFit(
        exponent=float(coef[1]),
        constant=float(np.exp(coef[0])),
        window=(int(n.min()), int(n.max())),
        residual=float(np.sqrt(np.mean(res**2))),
        points=len(pts),
        certified=all(p[2] for p in pts),
    )


def spectral_norm_estimate(k: WalkKernel, tol: float = 1e-10, max_iter: int = 200_000) -> float:
    """Power-iteration estimate of ``||P||_{2->2}`` on functions vanishing on the frontier.

    Without a frontier the operator is stochastic on a finite graph and its
    norm is exactly 1, which is returned as is.
    """
    g = k.graph
    if not g.has_frontier:
        return 1.0
    interior = ~g.frontier_mask
    if not interior.any():
        return 0.0
    v = interior.astype(float)
    v /= np.linalg.norm(v)
    prev = None
    for _ in range(max_iter):
        w = k.apply_killed(v)
        sigma = float(np.linalg.norm(w))
        if sigma == 0.0:
            return 0.0
        v = k.apply_killed_adjoint(w)
        nv = float(np.linalg.norm(v))
        v /= nv
        if prev is not None and abs(sigma - prev) < tol:
            return sigma
        prev = sigma
    warnings.warn("spectral norm power iteration did not converge", RuntimeWarning, stacklevel=2)
    return sigma


@dataclass(frozen=True, eq=False)
class GreenSum:
    """``sum_{i<=N} P^i h`` together with its increment sup-norms."""

    values: VertexFunction
    increments: np.ndarray = field(repr=False)
    steps: int
    converged: bool
    diverged: bool


def green_partial_sum(k: WalkKernel, h: VertexFunction, N: int | None = None, tol: float = 1e-12,
                      horizon: int = 50, max_iter: int = 1_000_000) -> GreenSum:
    """Partial sums of the Neumann series ``sum_i P^i h``.

    With ``N=None`` the sum runs until the increment sup-norm drops below
    ``tol``. Divergence is flagged when the increment norm fails to decrease
    over ``horizon`` steps; a run to tolerance then stops early and returns
    the partial sum. For a Dirichlet kernel ``h`` is read as vanishing on
    the frontier.
    """
    k._check(h)
    inc = np.array(h.values, dtype=float)
    if k.dirichlet:
        inc[k.graph.frontier_mask] = 0.0
    total = inc.copy()
    norms = [float(np.max(np.abs(inc)))]
    limit = max_iter if N is None else N
    converged = diverged = False
    i = 0
    while i < limit:
        if N is None and norms[-1] < tol:
            converged = True
            break
        inc = k.apply(inc)
        total += inc
        i += 1
        norms.append(float(np.max(np.abs(inc))))
        if not diverged and i >= horizon and norms[-1] > 0 and norms[-1] > (1 - 1e-6) * norms[-1 - horizon]:
            diverged = True
            if N is None:
                break
    if N is not None:
        converged = not diverged and norms[-1] < tol
    return GreenSum(VertexFunction(k.graph, total), np.array(norms), i, converged, diverged)
