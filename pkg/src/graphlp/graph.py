"""Finite rooted graphs with a frontier, and the discrete calculus on them.

A :class:`Graph` is a finite, connected, simple, symmetric graph stored in
CSR form. The ``frontier`` marks the truncation boundary of a finite window
cut out of an infinite graph; everything that needs to know "where the window
stops" reads it.

Vertex functions are dense real vectors. Edge functions are antisymmetric and
stored once per unordered edge, against the orientation ``u < v``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

DEFAULT_MAX_VERTICES = 10**7


class GraphError(ValueError):
    """Raised for malformed graphs or operands living on different graphs."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def _index_dtype(n: int):
    return np.int32 if n < 2**31 - 1 else np.int64


class Box:
    """The box ``[-L, L]^d`` of ``Z^d`` with nearest-neighbour edges.

    Vertices are numbered in C order of their shifted coordinates
    ``x + L``. Everything here is computed arithmetically, so a box graph
    never has to materialise its adjacency unless asked to.
    """

    def __init__(self, dim: int, radius: int):
        if dim < 1 or radius < 1:
            raise GraphError(f"box needs dim >= 1 and radius >= 1, got {dim}, {radius}")
        self.dim = int(dim)
        self.radius = int(radius)
        self.side = 2 * self.radius + 1
        self.shape = (self.side,) * self.dim
        self.size = self.side**self.dim

    def __repr__(self):
        return f"Box(dim={self.dim}, radius={self.radius})"

    def coords(self, ids) -> np.ndarray:
        ids = np.asarray(ids)
        return np.stack(np.unravel_index(ids, self.shape), axis=-1) - self.radius

    def index(self, coords) -> np.ndarray:
        c = np.asarray(coords) + self.radius
        if np.any(c < 0) or np.any(c >= self.side):
            raise GraphError("coordinates outside the box")
        return np.ravel_multi_index(tuple(np.moveaxis(c, -1, 0)), self.shape)

    @cached_property
    def origin(self) -> int:
        return int(self.index(np.zeros(self.dim, dtype=int)))

    def _axis_grid(self):
        return np.abs(np.arange(-self.radius, self.radius + 1))

    @cached_property
    def face_distance(self) -> np.ndarray:
        """``L - max_i |x_i|``: graph distance to the box boundary, as an nd array."""
        a = self._axis_grid()
        m = np.zeros(self.shape, dtype=np.int32)
        for ax in range(self.dim):
            shp = [1] * self.dim
            shp[ax] = self.side
            m = np.maximum(m, a.reshape(shp))
        return _readonly(self.radius - m)

    @cached_property
    def frontier_nd(self) -> np.ndarray:
        return _readonly(self.face_distance == 0)

    @cached_property
    def degree_nd(self) -> np.ndarray:
        a = (self._axis_grid() == self.radius).astype(np.uint8)
        deg = np.full(self.shape, 2 * self.dim, dtype=np.uint8)
        for ax in range(self.dim):
            shp = [1] * self.dim
            shp[ax] = self.side
            deg = deg - a.reshape(shp)
        return _readonly(deg)

    def origin_distance(self) -> np.ndarray:
        a = self._axis_grid()
        d = np.zeros(self.shape, dtype=np.int32)
        for ax in range(self.dim):
            shp = [1] * self.dim
            shp[ax] = self.side
            d = d + a.reshape(shp)
        return d

    @staticmethod
    def neighbor_sum(a: np.ndarray) -> np.ndarray:
        """Sum over lattice neighbours inside the array, zero beyond its edges."""
        out = np.zeros_like(a)
        for ax in range(a.ndim):
            if a.shape[ax] < 2:
                continue
            hi = [slice(None)] * a.ndim
            lo = [slice(None)] * a.ndim
            hi[ax] = slice(1, None)
            lo[ax] = slice(None, -1)
            hi, lo = tuple(hi), tuple(lo)
            out[hi] += a[lo]
            out[lo] += a[hi]
        return out

    def csr(self):
        n = self.size
        dt = _index_dtype(n)
        ids = np.arange(n, dtype=np.int64).reshape(self.shape)
        strides = [self.side ** (self.dim - 1 - ax) for ax in range(self.dim)]
        cols = []
        # sorted neighbour order: -stride_0 < ... < -stride_{d-1} < +stride_{d-1} < ... < +stride_0
        for ax in range(self.dim):
            c = (ids - strides[ax]).astype(dt)
            sl = [slice(None)] * self.dim
            sl[ax] = 0
            c[tuple(sl)] = -1
            cols.append(c.ravel())
        for ax in reversed(range(self.dim)):
            c = (ids + strides[ax]).astype(dt)
            sl = [slice(None)] * self.dim
            sl[ax] = -1
            c[tuple(sl)] = -1
            cols.append(c.ravel())
        cand = np.stack(cols, axis=1)
        del cols
        keep = cand >= 0
        indices = cand[keep]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(keep.sum(axis=1), out=indptr[1:])
        return indptr, indices


class Graph:
    """Finite symmetric bounded-valency graph with a root and a frontier.

    Parameters
    ----------
    indptr, indices : CSR adjacency with strictly increasing neighbour lists.
    root : the distinguished vertex used by the D^p norm.
    frontier : vertex ids marking the truncation boundary of a window.
    label : free-form description.
    validate : check symmetry, loops, duplicates and connectivity.
    """

    def __init__(
        self,
        indptr,
        indices,
        *,
        root: int = 0,
        frontier: Iterable[int] | np.ndarray = (),
        label: str = "",
        validate: bool = True,
        max_vertices: int | None = DEFAULT_MAX_VERTICES,
        _box: Box | None = None,
        _vertex_label: Callable[[int], object] | None = None,
        _parts: tuple | None = None,
        _part_offsets: np.ndarray | None = None,
        _bridges: tuple = (),
    ):
        if _box is not None:
            n = _box.size
        else:
            indptr = np.asarray(indptr, dtype=np.int64)
            n = len(indptr) - 1
            indices = np.asarray(indices, dtype=_index_dtype(max(n, 1)))
        if n < 1:
            raise GraphError("graph needs at least one vertex")
        if max_vertices is not None and n > max_vertices:
            raise GraphError(f"{n} vertices exceeds the cap of {max_vertices}")
        self.vertex_count = int(n)
        self.root = int(root)
        self.label = label
        self.box = _box
        self._vertex_label = _vertex_label
        self.parts = _parts
        self.part_offsets = None if _part_offsets is None else _readonly(np.asarray(_part_offsets))
        self.bridges = tuple(_bridges)
        if _box is None:
            self._set_csr(indptr, indices)
        fmask = np.zeros(n, dtype=bool)
        if isinstance(frontier, np.ndarray) and frontier.dtype == bool:
            if frontier.shape != (n,):
                raise GraphError("frontier mask has the wrong length")
            fmask[:] = frontier
        else:
            f = np.fromiter((int(v) for v in frontier), dtype=np.int64) if not isinstance(
                frontier, np.ndarray) else frontier.astype(np.int64)
            if f.size and (f.min() < 0 or f.max() >= n):
                raise GraphError("frontier vertex out of range")
            fmask[f] = True
        self._frontier_mask = _readonly(fmask)
        if not 0 <= self.root < n:
            raise GraphError(f"root {root} is not a vertex")
        if fmask[self.root]:
            raise GraphError("root lies in the frontier")
        if validate and _box is None:
            self._validate()

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_edges(cls, vertex_count: int, edges, **kwargs) -> "Graph":
        """Build from an iterable of ``(u, v)`` pairs (either orientation)."""
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        e = e.reshape(-1, 2)
        n = int(vertex_count)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise GraphError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise GraphError("self-loops are not allowed")
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        key = rows * n + cols
        order = np.argsort(key, kind="stable")
        key = key[order]
        if np.any(np.diff(key) == 0):
            raise GraphError("duplicate edges are not allowed")
        rows, cols = rows[order], cols[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        return cls(indptr, cols, **kwargs)

    @classmethod
    def from_box(cls, box: Box, *, label: str = "", max_vertices=DEFAULT_MAX_VERTICES) -> "Graph":
        return cls(
            None,
            None,
            root=box.origin,
            frontier=box.frontier_nd.ravel(),
            label=label,
            max_vertices=max_vertices,
            _box=box,
            _vertex_label=lambda v: tuple(int(c) for c in box.coords(v)),
        )

    def _set_csr(self, indptr, indices):
        self.__dict__["indptr"] = _readonly(indptr)
        self.__dict__["indices"] = _readonly(indices)

    def _validate(self):
        n = self.vertex_count
        indptr, indices = self.indptr, self.indices
        if indptr[0] != 0 or np.any(np.diff(indptr) < 0) or indptr[-1] != len(indices):
            raise GraphError("malformed CSR index pointer")
        if len(indices) and (indices.min() < 0 or indices.max() >= n):
            raise GraphError("neighbour id out of range")
        rows = self._csr_rows()
        if np.any(rows == indices):
            raise GraphError("self-loops are not allowed")
        same_row = rows[1:] == rows[:-1]
        if np.any(same_row & (indices[1:] <= indices[:-1])):
            raise GraphError("neighbour lists must be strictly increasing (no duplicates)")
        fwd = rows.astype(np.int64) * n + indices
        rev = np.sort(indices.astype(np.int64) * n + rows)
        if not np.array_equal(fwd, rev):
            raise GraphError("adjacency is not symmetric")
        if n > 1 and np.any(self.degree == 0):
            raise GraphError("graph is not connected (isolated vertex)")
        dist = self.distances([0])
        if np.any(dist < 0):
            raise GraphError("graph is not connected")

    # -- adjacency --------------------------------------------------------------

    @cached_property
    def indptr(self) -> np.ndarray:
        self._materialize()
        return self.__dict__["indptr"]

    @cached_property
    def indices(self) -> np.ndarray:
        self._materialize()
        return self.__dict__["indices"]

    def _materialize(self):
        if "indptr" in self.__dict__ and "indices" in self.__dict__:
            return
        indptr, indices = self.box.csr()
        self._set_csr(indptr, indices)

    def _csr_rows(self) -> np.ndarray:
        n = self.vertex_count
        return np.repeat(np.arange(n, dtype=_index_dtype(n)), np.diff(self.indptr))

    @cached_property
    def degree(self) -> np.ndarray:
        if self.box is not None:
            return _readonly(self.box.degree_nd.ravel().astype(np.int64))
        return _readonly(np.diff(self.indptr))

    @property
    def max_degree(self) -> int:
        return int(self.degree.max())

    @property
    def min_degree(self) -> int:
        return int(self.degree.min())

    @property
    def is_regular(self) -> bool:
        return self.max_degree == self.min_degree

    def neighbors(self, x: int) -> np.ndarray:
        return self.indices[self.indptr[x]:self.indptr[x + 1]]

    @cached_property
    def edges(self) -> np.ndarray:
        """Unordered edges as an ``(E, 2)`` array with ``u < v``, lexicographically sorted."""
        rows = self._csr_rows()
        keep = rows < self.indices
        e = np.stack([rows[keep], self.indices[keep]], axis=1)
        return _readonly(e)

    @property
    def edge_count(self) -> int:
        if self.box is not None and "edges" not in self.__dict__:
            return int(self.degree.sum()) // 2
        return len(self.edges)

    @cached_property
    def _edge_keys(self) -> np.ndarray:
        e = self.edges.astype(np.int64)
        return e[:, 0] * self.vertex_count + e[:, 1]

    def edge_ids(self, pairs) -> np.ndarray:
        """Edge ids of ``(u, v)`` pairs in either orientation; raises on non-edges."""
        p = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        u = np.minimum(p[:, 0], p[:, 1])
        v = np.maximum(p[:, 0], p[:, 1])
        keys = u * self.vertex_count + v
        pos = np.searchsorted(self._edge_keys, keys)
        pos_c = np.minimum(pos, len(self._edge_keys) - 1)
        if len(self._edge_keys) == 0 or np.any(self._edge_keys[pos_c] != keys):
            raise GraphError("restriction contains pairs that are not edges")
        return pos_c

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(len(self.indices), dtype=np.float64)
        n = self.vertex_count
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(n, n))

    def neighbor_sum(self, values: np.ndarray) -> np.ndarray:
        """``out[x] = sum_{y ~ x} values[y]``."""
        if self.box is not None:
            return Box.neighbor_sum(np.asarray(values, dtype=float).reshape(self.box.shape)).ravel()
        return self.adjacency @ np.asarray(values, dtype=float)

    # -- frontier, distances ----------------------------------------------------

    @property
    def frontier_mask(self) -> np.ndarray:
        return self._frontier_mask

    @cached_property
    def frontier(self) -> np.ndarray:
        return _readonly(np.flatnonzero(self._frontier_mask))

    @property
    def has_frontier(self) -> bool:
        return bool(self._frontier_mask.any())

    def distances(self, sources: Sequence[int] | np.ndarray) -> np.ndarray:
        """Multi-source BFS distances; ``-1`` marks unreachable vertices."""
        src = np.unique(np.asarray(sources, dtype=np.int64))
        if self.box is not None and len(src) == 1:
            c = self.box.coords(int(src[0]))
            d = np.zeros(self.box.shape, dtype=np.int64)
            for ax in range(self.box.dim):
                shp = [1] * self.box.dim
                shp[ax] = self.box.side
                a = np.abs(np.arange(-self.box.radius, self.box.radius + 1) - c[ax])
                d = d + a.reshape(shp)
            return d.ravel()
        n = self.vertex_count
        dist = np.full(n, -1, dtype=np.int64)
        dist[src] = 0
        level = src
        indptr, indices = self.indptr, self.indices
        k = 0
        while level.size:
            k += 1
            nb = _gather_neighbors(indptr, indices, level)
            nb = np.unique(nb)
            nb = nb[dist[nb] < 0]
            dist[nb] = k
            level = nb
        return dist

    @cached_property
    def frontier_distance(self) -> np.ndarray:
        """Distance of each vertex to the frontier (``inf`` when there is none)."""
        if not self.has_frontier:
            return _readonly(np.full(self.vertex_count, np.inf))
        if self.box is not None:
            return _readonly(self.box.face_distance.ravel().astype(float))
        return _readonly(self.distances(self.frontier).astype(float))

    @cached_property
    def root_distance(self) -> np.ndarray:
        return _readonly(self.distances([self.root]))

    def vertex_label(self, v: int):
        if self._vertex_label is None:
            return int(v)
        return self._vertex_label(int(v))

    def part_of(self, v: int) -> int:
        if self.part_offsets is None:
            return 0
        return int(np.searchsorted(self.part_offsets, v, side="right") - 1)

    def __repr__(self):
        return (f"Graph(label={self.label!r}, vertices={self.vertex_count}, "
                f"root={self.root}, frontier={int(self._frontier_mask.sum())})")


def _gather_neighbors(indptr, indices, verts) -> np.ndarray:
    """Concatenated neighbour lists of ``verts`` without a Python loop."""
    starts = indptr[verts]
    counts = indptr[verts + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    offs = np.repeat(starts - np.concatenate([[0], np.cumsum(counts)[:-1]]), counts)
    return indices[offs + np.arange(total)].astype(np.int64)


# -- value types ----------------------------------------------------------------


def _check_same(a, b):
    if a.graph is not b.graph:
        raise GraphError("operands live on different graphs")


@dataclass(frozen=True, eq=False)
class VertexFunction:
    """A real function on the vertices of ``graph``."""

    graph: Graph
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).reshape(-1)
        if v.shape != (self.graph.vertex_count,):
            raise GraphError(f"expected {self.graph.vertex_count} values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise GraphError("vertex function has non-finite entries")
        object.__setattr__(self, "values", _readonly(v))

    @classmethod
    def constant(cls, graph: Graph, c: float) -> "VertexFunction":
        return cls(graph, np.full(graph.vertex_count, float(c)))

    @classmethod
    def delta(cls, graph: Graph, x: int) -> "VertexFunction":
        v = np.zeros(graph.vertex_count)
        v[x] = 1.0
        return cls(graph, v)

    def __getitem__(self, x):
        return self.values[x]

    def __len__(self):
        return len(self.values)

    def __add__(self, other):
        if isinstance(other, VertexFunction):
            _check_same(self, other)
            return VertexFunction(self.graph, self.values + other.values)
        return VertexFunction(self.graph, self.values + float(other))

    def __sub__(self, other):
        if isinstance(other, VertexFunction):
            _check_same(self, other)
            return VertexFunction(self.graph, self.values - other.values)
        return VertexFunction(self.graph, self.values - float(other))

    def __mul__(self, c):
        return VertexFunction(self.graph, self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return VertexFunction(self.graph, -self.values)


@dataclass(frozen=True, eq=False)
class EdgeFlow:
    """Antisymmetric edge function, one value per unordered edge (``u < v``)."""

    graph: Graph
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).reshape(-1)
        if v.shape != (self.graph.edge_count,):
            raise GraphError(f"expected {self.graph.edge_count} edge values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise GraphError("edge flow has non-finite entries")
        object.__setattr__(self, "values", _readonly(v))

    @classmethod
    def zero(cls, graph: Graph) -> "EdgeFlow":
        return cls(graph, np.zeros(graph.edge_count))

    def at(self, x: int, y: int) -> float:
        """Value on the oriented edge ``(x, y)``."""
        e = self.graph.edge_ids([(x, y)])[0]
        return float(self.values[e]) if x < y else -float(self.values[e])

    def __add__(self, other):
        _check_same(self, other)
        return EdgeFlow(self.graph, self.values + other.values)

    def __sub__(self, other):
        _check_same(self, other)
        return EdgeFlow(self.graph, self.values - other.values)

    def __mul__(self, c):
        return EdgeFlow(self.graph, self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return EdgeFlow(self.graph, -self.values)


MASS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ProbabilityMeasure:
    """Finitely supported probability measure stored as ``support -> mass``."""

    graph: Graph
    support: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.support, dtype=np.int64).reshape(-1)
        m = np.asarray(self.mass, dtype=np.float64).reshape(-1)
        if s.shape != m.shape or s.size == 0:
            raise GraphError("measure needs a nonempty support with one mass per vertex")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise GraphError("masses must be finite and nonnegative")
        if abs(m.sum() - 1.0) > MASS_TOL:
            raise GraphError(f"total mass {m.sum()!r} differs from 1")
        object.__setattr__(self, "support", _readonly(s))
        object.__setattr__(self, "mass", _readonly(m))

    @classmethod
    def from_dense(cls, graph: Graph, values) -> "ProbabilityMeasure":
        v = np.asarray(values, dtype=np.float64)
        nz = np.flatnonzero(v)
        return cls(graph, nz, v[nz])

    @classmethod
    def delta(cls, graph: Graph, x: int) -> "ProbabilityMeasure":
        return cls(graph, [x], [1.0])

    def dense(self) -> np.ndarray:
        out = np.zeros(self.graph.vertex_count)
        out[self.support] = self.mass
        return out

    def integrate(self, g: VertexFunction) -> float:
        """``∫ g dξ``."""
        _check_same(self, g)
        return float(np.dot(g.values[self.support], self.mass))

    def norm(self, p: float) -> float:
        return _lp(self.mass, p)


# -- calculus -------------------------------------------------------------------


def conjugate_exponent(p: float) -> float:
    if p < 1:
        raise ValueError(f"exponent must be >= 1, got {p}")
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def _lp(values: np.ndarray, p: float) -> float:
    if p < 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    a = np.abs(np.asarray(values, dtype=float))
    if a.size == 0:
        return 0.0
    m = float(a.max())
    if math.isinf(p):
        return m
    if m == 0.0:
        return 0.0
    if p == 1:
        return float(a.sum())
    if p == 2:
        return m * float(np.sqrt(np.sum((a / m) ** 2)))
    return m * float(np.sum((a / m) ** p)) ** (1.0 / p)


def gradient(g: VertexFunction) -> EdgeFlow:
    """``∇g(x, y) = g(y) - g(x)`` on every edge."""
    e = g.graph.edges
    return EdgeFlow(g.graph, g.values[e[:, 1]] - g.values[e[:, 0]])


def divergence(t: EdgeFlow) -> VertexFunction:
    """Net inflow ``∇*t(x) = sum_{y ~ x} t(y, x)``; adjoint of :func:`gradient`."""
    graph = t.graph
    e = graph.edges
    n = graph.vertex_count
    out = np.bincount(e[:, 1], weights=t.values, minlength=n)
    out -= np.bincount(e[:, 0], weights=t.values, minlength=n)
    return VertexFunction(graph, out)


def edge_pairing(f: EdgeFlow, h: EdgeFlow) -> float:
    _check_same(f, h)
    return float(np.dot(f.values, h.values))


def vertex_pairing(g: VertexFunction, h: VertexFunction) -> float:
    _check_same(g, h)
    return float(np.dot(g.values, h.values))


def lp_norm_vertices(g: VertexFunction, p: float) -> float:
    return _lp(g.values, p)


def lp_norm_edges(t: EdgeFlow, p: float, restriction=None) -> float:
    """p-norm over unordered edges, optionally over a subset of ``(u, v)`` pairs."""
    if p < 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    if restriction is None:
        return _lp(t.values, p)
    ids = np.unique(t.graph.edge_ids(restriction))
    return _lp(t.values[ids], p)


def dp_norm(g: VertexFunction, p: float) -> float:
    """``(||∇g||_p^p + |g(root)|^p)^(1/p)``."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    grad = gradient(g).values
    r = abs(float(g.values[g.graph.root]))
    if math.isinf(p):
        return max(_lp(grad, p), r)
    return _lp(np.append(grad, r), p)


def mazur_map(g, p: float):
    """Pointwise ``|g|^(p-2) g`` (zero where ``g`` is zero).

    Accepts a :class:`VertexFunction`, an :class:`EdgeFlow` or a plain array
    and returns the same kind.
    """
    if p <= 1:
        raise ValueError(f"Mazur map needs p > 1, got {p}")
    vals = g.values if isinstance(g, (VertexFunction, EdgeFlow)) else np.asarray(g, dtype=float)
    a = np.abs(vals)
    out = np.zeros_like(vals)
    nz = a > 0
    out[nz] = a[nz] ** (p - 2.0) * vals[nz]
    if isinstance(g, VertexFunction):
        return VertexFunction(g.graph, out)
    if isinstance(g, EdgeFlow):
        return EdgeFlow(g.graph, out)
    return out
