"""Triviality diagnostics for degree-one ℓ^p-cohomology on finite windows.

Everything here returns evidence about the infinite graph a window stands
in for, never a proof: verdicts carry the numbers they were derived from.
A complement component counts towards an end iff it reaches the frontier.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph
from scipy.sparse.linalg import spsolve

from .boundary import DifferenceNorm, difference_integrability
from .graph import (Graph, GraphError, VertexFunction, divergence, gradient,
                    lp_norm_edges, mazur_map)
from .walk import WalkKernel

TRIVIAL = "trivial-evidence"
NONTRIVIAL = "nontrivial-evidence"
INCONCLUSIVE = "inconclusive"

DEFAULT_EPS = (0.1, 0.03, 0.01)


@dataclass(frozen=True)
class TrivialityVerdict:
    verdict: str
    witnesses: dict
    parameters: dict


def truncate(g: VertexFunction, t: float) -> VertexFunction:
    """Clip ``g`` to ``[-t, t]``: ``g_t(x) = t sign g(x)`` where ``|g(x)| >= t``."""
    if not t > 0:
        raise ValueError(f"truncation level must be positive, got {t}")
    return VertexFunction(g.graph, np.clip(g.values, -t, t))


# --- exhaustions and ends -------------------------------------------------------------------

def default_radii(graph: Graph, count: int = 4) -> tuple[int, ...]:
    """Evenly spread radii strictly inside the frontier distance of the root."""
    R = graph.frontier_distance[graph.root]
    top = int(graph.root_distance.max()) if math.isinf(R) else int(R) - 1
    top = max(top, 1)
    radii = sorted({max(1, int(round(top * (i + 1) / count))) for i in range(count)})
    return tuple(radii)


class Exhaustion:
    """Balls ``B_r(root)`` for increasing ``r`` and the components of their complements."""

    def __init__(self, graph: Graph, radii=None):
        radii = default_radii(graph) if radii is None else tuple(int(r) for r in radii)
        if not radii or any(b <= a for a, b in zip(radii, radii[1:])) or radii[0] < 0:
            raise ValueError("radii must be non-negative and strictly increasing")
        self.graph = graph
        self.radii = radii

    @cached_property
    def distance(self) -> np.ndarray:
        return self.graph.root_distance

    def ball(self, i: int) -> np.ndarray:
        return self.distance <= self.radii[i]

    def components(self, i: int) -> np.ndarray:
        """Component labels of the complement of ball ``i``; ``-1`` inside the ball."""
        return self._components[i]

    @cached_property
    def _components(self) -> list:
        return [self._label(~self.ball(i)) for i in range(len(self.radii))]

    def _label(self, outside: np.ndarray) -> np.ndarray:
        g = self.graph
        n = g.vertex_count
        indptr, indices = g.indptr, g.indices
        rows = np.repeat(np.arange(n, dtype=indices.dtype), np.diff(indptr))
        keep = outside[rows] & outside[indices]
        r, c = rows[keep], indices[keep]
        del rows, keep
        a = sp.csr_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(n, n))
        del r, c
        _, lab = csgraph.connected_components(a, directed=False)
        lab = lab.astype(np.int64)
        lab[~outside] = -1
        # compact the labels of outside vertices to 0..m-1
        ids, lab_out = np.unique(lab[outside], return_inverse=True)
        lab[outside] = lab_out
        return lab

    def frontier_components(self, i: int) -> np.ndarray:
        """Labels of complement components that touch the frontier."""
        lab = self.components(i)
        hit = lab[self.graph.frontier_mask]
        return np.unique(hit[hit >= 0])

    def within_frontier(self) -> bool:
        R = self.graph.frontier_distance[self.graph.root]
        return bool(self.radii[-1] < R)


@dataclass(frozen=True, eq=False)
class EndsReport:
    count: int
    stabilization_radius: int | None
    representatives: tuple = field(repr=False)
    counts: tuple = ()
    radii: tuple = ()
    stable: bool = False
    flagged: bool = True
    exhaustion: Exhaustion | None = field(default=None, repr=False)


def ends(graph: Graph, exhaustion: Exhaustion | None = None) -> EndsReport:
    """Count frontier-reaching complement components, checking they stabilise.

    Between consecutive radii every outer component sits inside exactly
    one inner one; the count is stable from the first radius at which
    this map is a bijection on frontier-reaching components for all later
    radii. The last two radii must agree and lie inside the frontier,
    otherwise the report is flagged.
    """
    ex = Exhaustion(graph) if exhaustion is None else exhaustion
    if ex.graph is not graph:
        raise GraphError("exhaustion belongs to another graph")
    m = len(ex.radii)
    fc = [ex.frontier_components(i) for i in range(m)]
    counts = tuple(len(c) for c in fc)
    bij = []
    for i in range(m - 1):
        inner, outer = ex.components(i), ex.components(i + 1)
        images = []
        for c in fc[i + 1]:
            v = np.flatnonzero(outer == c)[0]
            images.append(int(inner[v]))
        bij.append(len(set(images)) == len(images) == len(fc[i]) and set(images) == set(fc[i].tolist()))
    stab = None
    for i in range(m - 1):
        if all(bij[i:]):
            stab = ex.radii[i]
            break
    stable = m >= 2 and bij[-1] and counts[-1] == counts[-2]
    lab = ex.components(m - 1)
    reps = tuple(np.flatnonzero(lab == c) for c in fc[-1])
    flagged = not stable or not ex.within_frontier()
    return EndsReport(counts[-1], stab, reps, counts, ex.radii, stable, flagged, ex)


# --- constant at infinity ---------------------------------------------------------------------

def constant_at_infinity(g: VertexFunction, exhaustion: Exhaustion | None = None,
                         eps_grid=DEFAULT_EPS) -> TrivialityVerdict:
    """Is ``g`` close to one constant outside large balls?

    ``c`` is the median of ``g`` outside the largest ball and
    ``sup_r = max |g - c|`` outside each ball, measured relative to the
    spread of ``g``. Trivial-evidence when ``sup_r`` drops below every
    ``ε`` on the grid; nontrivial-evidence when it stays above the largest
    ``ε`` and has stopped decreasing; inconclusive otherwise.
    """
    ex = Exhaustion(g.graph) if exhaustion is None else exhaustion
    if ex.graph is not g.graph:
        raise GraphError("exhaustion belongs to another graph")
    v = g.values
    eps = tuple(sorted((float(e) for e in eps_grid), reverse=True))
    params = {"radii": list(ex.radii), "eps_grid": list(eps)}
    scale = float(v.max() - v.min())
    if scale == 0.0:
        return TrivialityVerdict(TRIVIAL, {"constant": float(v[0]), "scale": 0.0, "sup_outside": [0.0] * len(ex.radii),
                                           "radius": 0}, params)
    c = float(np.median(v[~ex.ball(len(ex.radii) - 1)])) if (~ex.ball(len(ex.radii) - 1)).any() \
        else float(np.median(v))
    sups = []
    for i in range(len(ex.radii)):
        out = ~ex.ball(i)
        sups.append(float(np.max(np.abs(v[out] - c))) if out.any() else 0.0)
    rel = [s / scale for s in sups]
    wit = {"constant": c, "scale": scale, "sup_outside": sups, "relative": rel}
    reached = [next((ex.radii[i] for i, r in enumerate(rel) if r <= e), None) for e in eps]
    wit["radius_per_eps"] = reached
    if not ex.within_frontier():
        return TrivialityVerdict(INCONCLUSIVE, wit, params)
    if all(r is not None for r in reached):
        wit["radius"] = reached[-1]
        return TrivialityVerdict(TRIVIAL, wit, params)
    stalled = len(rel) >= 2 and rel[-1] >= 0.9 * rel[-2]
    if rel[-1] > eps[0] and stalled:
        return TrivialityVerdict(NONTRIVIAL, wit, params)
    return TrivialityVerdict(INCONCLUSIVE, wit, params)


def stitched_classification(parts, stitched: Graph, g: VertexFunction, eps_grid=DEFAULT_EPS,
                            radii=None) -> TrivialityVerdict:
    """Classify ``g`` on a stitched graph through its restrictions to the parts.

    Nontrivial-evidence when some part is nontrivial or the parts settle
    at distinct constants; trivial-evidence when all settle at one
    constant; inconclusive when any part is. ``parts=None`` splits ``g``
    along the stitch record of ``stitched``.
    """
    if g.graph is not stitched:
        raise GraphError("g does not live on the stitched graph")
    if parts is None:
        if stitched.parts is None:
            raise GraphError("graph carries no part record")
        off = stitched.part_offsets
        parts = [(p, VertexFunction(p, g.values[off[i]:off[i + 1]])) for i, p in enumerate(stitched.parts)]
    verdicts = []
    for p, h in parts:
        if h.graph is not p:
            raise GraphError("restriction does not live on its part")
        verdicts.append(constant_at_infinity(h, Exhaustion(p, radii), eps_grid))
    kinds = [v.verdict for v in verdicts]
    consts = [v.witnesses["constant"] for v in verdicts]
    spread = float(g.values.max() - g.values.min())
    gap = float(max(consts) - min(consts))
    wit = {"parts": [{"verdict": v.verdict, **v.witnesses} for v in verdicts], "constants": consts,
           "constant_gap": gap, "scale": spread}
    params = {"eps_grid": list(eps_grid), "radii": radii}
    if NONTRIVIAL in kinds:
        return TrivialityVerdict(NONTRIVIAL, wit, params)
    if INCONCLUSIVE in kinds:
        return TrivialityVerdict(INCONCLUSIVE, wit, params)
    # all parts constant at infinity: one constant or several
    if gap > 2 * min(eps_grid) * spread:
        return TrivialityVerdict(NONTRIVIAL, wit, params)
    return TrivialityVerdict(TRIVIAL, wit, params)


# --- the ℓ^1 boundary map over ends ------------------------------------------------------------

def sup_bound(g: VertexFunction) -> tuple[float, float]:
    """``(||g||_inf, ||∇g||_1 + min |g|)``; the first never exceeds the second on a connected graph."""
    v = g.values
    return float(np.max(np.abs(v))), lp_norm_edges(gradient(g), 1) + float(np.min(np.abs(v)))


@dataclass(frozen=True)
class BoundaryMap:
    values: tuple
    raw: tuple
    spreads: tuple
    flagged: bool
    sup_norm: float
    bound: float

    @property
    def trivial(self) -> bool:
        return all(abs(x) <= 1e-12 * max(1.0, self.sup_norm) for x in self.values)


PLATEAU_TOL = 0.05


def ell1_boundary_map(g: VertexFunction, ends_report: EndsReport) -> BoundaryMap:
    """Value of ``g`` on each end, normalised so the first end reads 0.

    Each value is the mean of ``g`` over the end's outermost component; an
    end whose component spread exceeds 5% of the spread of ``g`` is flagged.
    """
    if ends_report.count < 1:
        raise GraphError("no ends to evaluate on")
    v = g.values
    raw, spreads = [], []
    for rep in ends_report.representatives:
        raw.append(float(v[rep].mean()))
        spreads.append(float(v[rep].max() - v[rep].min()))
    scale = float(v.max() - v.min())
    flagged = any(s > PLATEAU_TOL * scale for s in spreads)
    vals = tuple(r - raw[0] for r in raw)
    lhs, rhs = sup_bound(g)
    return BoundaryMap(vals, tuple(raw), tuple(spreads), flagged, lhs, rhs)


# --- p-harmonic representatives -----------------------------------------------------------------

def p_energy(h: VertexFunction, p: float) -> float:
    """``sum_edges |∇h|^p``."""
    return float(np.sum(np.abs(gradient(h).values) ** p))


def _boundary_array(graph: Graph, data) -> np.ndarray:
    n = graph.vertex_count
    fr = graph.frontier_mask
    vals = np.full(n, np.nan)
    if isinstance(data, VertexFunction):
        vals[:] = data.values
    elif isinstance(data, dict):
        for x, y in data.items():
            vals[int(x)] = float(y)
    else:
        arr = np.asarray(data, dtype=float)
        if arr.shape != (n,):
            raise GraphError("boundary data must be a dict or a full-length array")
        vals[:] = arr
    if np.any(np.isnan(vals[fr])):
        raise GraphError("boundary data must cover every frontier vertex")
    return np.where(fr, vals, 0.0)


def _incidence(graph: Graph) -> sp.csr_matrix:
    e = graph.edges
    m = len(e)
    rows = np.repeat(np.arange(m), 2)
    cols = e.ravel()
    data = np.tile([-1.0, 1.0], m)
    return sp.csr_matrix((data, (rows, cols)), shape=(m, graph.vertex_count))


def harmonic_solve(graph: Graph, boundary_data) -> VertexFunction:
    """Harmonic extension of frontier data: ``(I - P)h = 0`` on the interior."""
    if not graph.has_frontier:
        raise GraphError("harmonic extension needs a frontier")
    h = _boundary_array(graph, boundary_data)
    fr = graph.frontier_mask
    I = np.flatnonzero(~fr)
    if I.size == 0:
        return VertexFunction(graph, h)
    B = _incidence(graph)
    L = (B.T @ B).tocsr()
    rhs = -(L[I][:, np.flatnonzero(fr)] @ h[fr])
    try:
        h[I] = spsolve(L[I][:, I].tocsc(), rhs)
    except RuntimeError as exc:  # singular: an interior component misses the frontier
        raise GraphError("some interior component does not reach the frontier") from exc
    if not np.all(np.isfinite(h)):
        raise GraphError("some interior component does not reach the frontier")
    return VertexFunction(graph, h)


@dataclass(frozen=True, eq=False)
class PHarmonicResult:
    function: VertexFunction
    p: float
    residual: float
    energy: float
    iterations: int
    converged: bool


def stationarity_residual(h: VertexFunction, p: float) -> float:
    """``||∇* Maz_{p,p'}(∇h)||_inf`` over interior vertices."""
    r = divergence(mazur_map(gradient(h), p)).values
    r = np.abs(r[~h.graph.frontier_mask])
    return float(r.max()) if r.size else 0.0


def p_harmonic_solve(graph: Graph, p: float, boundary_data, tol: float = 1e-10,
                     max_iter: int = 500, initial=None) -> PHarmonicResult:
    """Minimise ``sum_edges |∇h|^p`` with ``h`` fixed on the frontier.

    Damped Newton on the convex energy, started from the ``p = 2``
    solution unless ``initial`` (interior values, full-length) is given. The Hessian uses edge weights ``(∇h^2 + ε^2)^{(p-2)/2}``
    with a small ``ε`` so it stays invertible where the gradient vanishes;
    steps are accepted by an Armijo test on the exact energy. Stops when
    the stationarity residual on interior vertices drops below ``tol``.
    """
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    fr = graph.frontier_mask
    if initial is None:
        h = harmonic_solve(graph, boundary_data).values.copy()
    else:
        h = np.asarray(initial, dtype=float).copy()
        if h.shape != (graph.vertex_count,):
            raise GraphError("initial guess must give a value for every vertex")
        h[fr] = _boundary_array(graph, boundary_data)[fr]
    I = np.flatnonzero(~fr)
    B = _incidence(graph)
    BI = B[:, I].tocsc()
    scale = float(np.max(np.abs(h))) or 1.0

    def energy(x):
        return float(np.sum(np.abs(B @ x) ** p))

    def grad(x):
        d = B @ x
        t = np.sign(d) * np.abs(d) ** (p - 1)
        return p * (BI.T @ t), d

    it = 0
    res = stationarity_residual(VertexFunction(graph, h), p)
    converged = res <= tol
    eps = 1e-6 * scale
    E = energy(h)
    while not converged and it < max_iter and I.size:
        it += 1
        gI, d = grad(h)
        w = p * (p - 1) * (d * d + eps * eps) ** ((p - 2) / 2)
        H = (BI.T @ sp.diags(w) @ BI).tocsc()
        step = -spsolve(H, gI)
        slope = float(gI @ step)
        if slope >= 0:  # not a descent direction: fall back to the gradient
            step = -gI
            slope = -float(gI @ gI)
        lam = 1.0
        while True:
            trial = h.copy()
            trial[I] += lam * step
            Et = energy(trial)
            if Et <= E + 1e-4 * lam * slope or lam < 1e-12:
                break
            lam *= 0.5
        moved = float(np.max(np.abs(trial - h)))
        h, E = trial, Et
        res = stationarity_residual(VertexFunction(graph, h), p)
        converged = res <= tol
        if not converged and moved <= 1e-15 * scale:
            # the step underflowed; shrink the smoothing and try again
            if eps > 1e-14 * scale:
                eps *= 1e-2
            else:
                break
        elif lam == 1.0 and eps > 1e-12 * scale:
            eps *= 0.1
    return PHarmonicResult(VertexFunction(graph, h), float(p), res, E, it, converged)


# --- ℓ^{p,q} diagnostics ---------------------------------------------------------------------------

def lpq_threshold(d: float, p: float) -> float:
    """``dp / (d - 2p)``, or ``inf`` when ``d <= 2p``."""
    return d * p / (d - 2 * p) if d > 2 * p else math.inf


@dataclass(frozen=True)
class LpqReport:
    p: float
    q: float
    d: float | None
    threshold: float | None
    above_threshold: bool | None
    norm: DifferenceNorm


def lpq_difference_check(g: VertexFunction, g_tilde: VertexFunction, p: float, q: float,
                         windows=None, d: float | None = None) -> LpqReport:
    """Window trend of ``||g̃ - g||_q``, framed against ``q > dp/(d-2p)`` when ``d`` is given."""
    if q < 1:
        raise ValueError("q must be >= 1")
    k = WalkKernel(g.graph)
    (dn,) = difference_integrability(k, g, g_tilde, [q], radii=windows)
    thr = None if d is None else lpq_threshold(d, p)
    above = None if thr is None else bool(q > thr)
    return LpqReport(float(p), float(q), d, thr, above, dn)
