"""Boundary values of functions under iterated walk averaging, and harmonic representatives."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import fft

from .generators import WindowSpec, glued_double_grid
from .graph import DEFAULT_MAX_VERTICES, Box, Graph, GraphError, VertexFunction, _lp
from .walk import GreenSum, WalkKernel, _measures, exactness_radius, green_partial_sum


@dataclass(frozen=True, eq=False)
class BoundaryValueReport:
    limit: VertexFunction
    iterations: int
    sup_increment: float
    exactness_radius: float
    residual: float
    converged: bool

    @property
    def flagged(self) -> bool:
        return not self.converged


def _default_max_n(graph: Graph) -> int:
    ecc = int(graph.root_distance.max())
    return 10 * max(2 * ecc, 1) ** 2


def harmonic_residual(k: WalkKernel, h: VertexFunction) -> float:
    """``sup |h(x) - mean_{y~x} h(y)|`` over non-frontier vertices.

    Independent of the laziness, since ``I - P_a = (1 - a)(I - P)``.
    """
    k._check(h)
    g = k.graph
    r = np.abs(h.values - g.neighbor_sum(h.values) / g.degree)
    r = r[~g.frontier_mask]
    return float(r.max()) if r.size else 0.0


def boundary_value(k: WalkKernel, g: VertexFunction, tol: float = 1e-9,
                   max_n: int | None = None) -> BoundaryValueReport:
    """Iterate ``P^(n) * g`` until successive iterates differ by less than ``tol`` in sup norm.

    Non-convergence within ``max_n`` steps is reported, not raised.
    ``iterations`` counts the steps whose increment was still above ``tol``.
    """
    k._check(g)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_n is None:
        max_n = _default_max_n(k.graph)
    v = np.array(g.values, dtype=float)
    inc = math.inf
    n = 0
    converged = False
    while n <= max_n:
        w = k.apply(v)
        inc = float(np.max(np.abs(w - v)))
        v = w
        if inc < tol:
            converged = True
            break
        n += 1
    lim = VertexFunction(k.graph, v)
    return BoundaryValueReport(
        limit=lim,
        iterations=min(n, max_n),
        sup_increment=inc,
        exactness_radius=exactness_radius(k.graph, k.graph.root),
        residual=harmonic_residual(k, lim),
        converged=converged,
    )


@dataclass(frozen=True, eq=False)
class LohoueResult:
    """``g + sum_{i<=N} P^i(-Δg)`` with the increment history of the Green sum."""

    function: VertexFunction
    green: GreenSum = field(repr=False)
    observed_ratio: float

    @property
    def diverged(self) -> bool:
        return self.green.diverged

    @property
    def converged(self) -> bool:
        return self.green.converged


def _observed_ratio(norms: np.ndarray) -> float:
    """Geometric-mean decay rate over the second half of the positive part of ``norms``."""
    pos = norms[norms > 0]
    if len(pos) < 4:
        return 0.0
    a = len(pos) // 2
    b = len(pos) - 1
    if b <= a:
        return 0.0
    return float((pos[b] / pos[a]) ** (1.0 / (b - a)))


def lohoue_representative(k: WalkKernel, g: VertexFunction, N: int | None = None,
                          tol: float = 1e-13) -> LohoueResult:
    """Harmonic representative ``g + Δ^{-1}(-Δg)`` through the Neumann series of ``P``.

    With a Dirichlet kernel the series runs on the killed walk and the
    output is the harmonic extension of ``g``'s frontier values, the same
    limit :func:`boundary_value` reaches. ``N=None`` sums until the
    increments drop below ``tol``.
    """
    k._check(g)
    v = g.values
    lap = v - k.apply(v)
    gs = green_partial_sum(k, VertexFunction(k.graph, -lap), N=N, tol=tol)
    if gs.diverged:
        warnings.warn("Green sum increments fail to decay", RuntimeWarning, stacklevel=2)
    out = VertexFunction(k.graph, v + gs.values.values)
    return LohoueResult(out, gs, _observed_ratio(gs.increments))


# --- the glued two-grid example -------------------------------------------------------------

def _default_green_steps(L: int, d: int) -> int:
    rho = math.cos(math.pi / (2 * L))
    return int(math.ceil(math.log(1e-12) / math.log(rho)))


def box_green_function(d: int, L: int, N: int | None = None) -> tuple[np.ndarray, int]:
    """``f = sum_{i<=N} Q^i δ_0`` for the killed simple walk on the ``Z^d`` box of radius ``L``.

    Computed in the sine basis of the interior box (side ``2L-1``), where
    ``Q`` is diagonal with eigenvalues ``(1/d) sum_j cos(π k_j / 2L)`` and
    the truncated series is ``(1 - μ^{N+1}) / (1 - μ)``. Returned on the
    full box (frontier values 0) with shape ``(2L+1,)*d``, plus ``N``.
    """
    if L < 2:
        raise GraphError("box Green function needs L >= 2")
    if N is None:
        N = _default_green_steps(L, d)
    m = 2 * L - 1
    mu = np.zeros((m,) * d)
    c = np.cos(np.pi * np.arange(1, m + 1) / (2 * L)) / d
    for ax in range(d):
        shp = [1] * d
        shp[ax] = m
        mu = mu + c.reshape(shp)
    delta = np.zeros((m,) * d)
    delta[(L - 1,) * d] = 1.0
    coef = fft.dstn(delta, type=1, norm="ortho")
    coef *= (1.0 - mu ** (N + 1)) / (1.0 - mu)
    f_int = fft.idstn(coef, type=1, norm="ortho")
    f = np.zeros((m + 2,) * d)
    f[(slice(1, -1),) * d] = f_int
    return f, N


@dataclass(frozen=True, eq=False)
class GluedExample:
    graph: Graph
    function: VertexFunction
    green: np.ndarray = field(repr=False)
    K: float
    steps: int


def glued_green_example(d: int, L: int, N: int | None = None,
                        max_vertices: int | None = DEFAULT_MAX_VERTICES) -> GluedExample:
    """Two ``Z^d`` windows glued at their origins, carrying a non-constant harmonic function.

    ``g(z, 1) = f(z)`` and ``g(z, 2) = K + 2f(0) - f(z)`` with ``f`` the
    truncated Dirichlet Green function of one window and ``K = ∇*∇f(0)``
    (net inflow convention, so ``K = sum_{y~0} (f(0) - f(y))``). The bridge
    makes ``g`` harmonic at both origins; elsewhere it inherits the
    harmonicity of ``f``.
    """
    if d < 3:
        raise GraphError("the glued example needs a transient lattice, d >= 3")
    graph = glued_double_grid(WindowSpec(d, L), max_vertices=max_vertices)
    f, N = box_green_function(d, L, N)
    o = (L,) * d
    f0 = f[o]
    nb = 0.0
    for ax in range(d):
        for s in (-1, 1):
            idx = list(o)
            idx[ax] += s
            nb += f[tuple(idx)]
    K = float(2 * d * f0 - nb)
    flat = f.ravel()
    values = np.concatenate([flat, K + 2 * f0 - flat])
    return GluedExample(graph, VertexFunction(graph, values), f, K, N)


# --- integrability of the correction --------------------------------------------------------

@dataclass(frozen=True)
class DifferenceNorm:
    q: float
    norm: float
    trend: str
    radii: tuple
    window_norms: tuple


STABLE_REL = 0.05


def _trend(norms, scale) -> str:
    norms = np.asarray(norms, dtype=float)
    if np.all(norms <= 1e-14 * max(scale, 1.0)):
        return "zero"
    if len(norms) < 2:
        return "stable"
    last, prev = norms[-1], norms[-2]
    if last <= prev or (last - prev) <= STABLE_REL * last:
        return "stable"
    return "growing"


def difference_integrability(k: WalkKernel, g: VertexFunction, g_tilde: VertexFunction, q_list,
                             radii=None) -> list[DifferenceNorm]:
    """``||g̃ - g||_q`` on nested balls around the root, with a trend verdict per ``q``.

    ``"stable"`` when the last enlargement adds at most 5% to the norm,
    ``"growing"`` otherwise, ``"zero"`` when the difference vanishes. This
    is evidence about the infinite graph, never a proof.
    """
    k._check(g)
    k._check(g_tilde)
    dist = k.graph.root_distance
    if radii is None:
        top = int(dist.max())
        radii = sorted({max(1, round(top * s)) for s in (0.25, 0.5, 0.75, 1.0)})
    radii = tuple(int(r) for r in radii)
    diff = g_tilde.values - g.values
    scale = float(np.max(np.abs(g.values))) if g.values.size else 1.0
    out = []
    for q in q_list:
        norms = tuple(_lp(diff[dist <= r], q) for r in radii)
        out.append(DifferenceNorm(float(q), _lp(diff, q), _trend(norms, scale), radii, norms))
    return out


def green_kernel_norm(k: WalkKernel, x: int, q: float, N: int) -> float:
    """``|| sum_{i<=N} P^(i)_x ||_q`` as a kernel (vertex) norm."""
    acc = np.zeros(k.graph.vertex_count)
    for _, m in _measures(k, x, N):
        acc += m
    return _lp(acc, q)
