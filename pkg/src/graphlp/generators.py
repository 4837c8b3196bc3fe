"""Builders for the graph families used in the experiments.

Every builder returns a validated, connected :class:`~graphlp.graph.Graph`.
Windows of infinite graphs mark their truncation boundary as the frontier.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Hashable, Sequence

import numpy as np

from .graph import DEFAULT_MAX_VERTICES, Box, Graph, GraphError, _gather_neighbors

DEFAULT_MAX_EDGES = 5 * 10**7


@dataclass(frozen=True)
class WindowSpec:
    """Box ``[-L, L]^d`` of ``Z^d``; its boundary vertices form the frontier."""

    dim: int
    radius: int
    frontier_policy: str = "box-boundary"

    def __post_init__(self):
        if self.dim < 1 or self.radius < 1:
            raise GraphError(f"window needs dim >= 1 and radius >= 1, got {self.dim}, {self.radius}")
        if self.frontier_policy != "box-boundary":
            raise GraphError(f"unknown frontier policy {self.frontier_policy!r}")

    @property
    def vertex_count(self) -> int:
        return (2 * self.radius + 1) ** self.dim


def grid_window(spec: WindowSpec, max_vertices: int | None = DEFAULT_MAX_VERTICES) -> Graph:
    if max_vertices is not None and spec.vertex_count > max_vertices:
        raise GraphError(f"window has {spec.vertex_count} vertices, cap is {max_vertices}")
    box = Box(spec.dim, spec.radius)
    return Graph.from_box(box, label=f"Z^{spec.dim} window L={spec.radius}", max_vertices=max_vertices)


def stitch(parts: Sequence[Graph], bridges, k: int | None = None, *, root=None, label: str = "",
           max_vertices: int | None = DEFAULT_MAX_VERTICES) -> Graph:
    """Disjoint union of ``parts`` plus bridge edges.

    ``bridges`` is a list of ``((i, u), (j, v))``: vertex ``u`` of part ``i``
    joined to vertex ``v`` of part ``j``. ``root`` is a ``(part, vertex)``
    pair and defaults to the root of the first part. The result remembers
    which part each vertex came from (``part_offsets``) so functions can be
    restricted back.
    """
    parts = tuple(parts)
    if not parts:
        raise GraphError("nothing to stitch")
    offsets = np.zeros(len(parts) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([p.vertex_count for p in parts])
    n = int(offsets[-1])
    if max_vertices is not None and n > max_vertices:
        raise GraphError(f"stitched graph has {n} vertices, cap is {max_vertices}")

    glob = []
    per_part = np.zeros(len(parts), dtype=int)
    for (i, u), (j, v) in bridges:
        if not (0 <= i < len(parts) and 0 <= j < len(parts)):
            raise GraphError("bridge refers to a missing part")
        if not (0 <= u < parts[i].vertex_count and 0 <= v < parts[j].vertex_count):
            raise GraphError("bridge endpoint is not a vertex of its part")
        a, b = int(offsets[i] + u), int(offsets[j] + v)
        if a == b:
            raise GraphError("bridge would be a self-loop")
        glob.append((min(a, b), max(a, b)))
        per_part[i] += 1
        if j != i:
            per_part[j] += 1
    if len(set(glob)) != len(glob):
        raise GraphError("duplicate bridge")
    if k is not None and np.any(per_part > k):
        raise GraphError(f"some part receives more than k={k} bridges")

    # parts must become one component
    parent = list(range(len(parts)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for (i, _), (j, _) in bridges:
        parent[find(i)] = find(j)
    if len({find(i) for i in range(len(parts))}) != 1:
        raise GraphError("stitched graph is not connected")

    indptrs, indices = [np.zeros(1, dtype=np.int64)], []
    for off, p in zip(offsets[:-1], parts):
        if p.box is not None and "indptr" not in p.__dict__:
            ip, ix = p.box.csr()
        else:
            ip, ix = p.indptr, p.indices
        indptrs.append(ip[1:] + indptrs[-1][-1])
        indices.append(ix.astype(np.int64 if n >= 2**31 - 1 else np.int32) + int(off))
    indptr = np.concatenate(indptrs)
    idx = np.concatenate(indices)
    del indices
    if glob:
        rows, cols = [], []
        for a, b in glob:
            rows += [a, b]
            cols += [b, a]
        rows, cols = np.array(rows), np.array(cols)
        # insertion points keep each row sorted
        pos = np.array([indptr[r] + np.searchsorted(idx[indptr[r]:indptr[r + 1]], c)
                        for r, c in zip(rows, cols)])
        order = np.lexsort((cols, rows, pos))
        idx = np.insert(idx, pos[order], cols[order].astype(idx.dtype))
        indptr = indptr + np.concatenate([[0], np.cumsum(np.bincount(rows, minlength=n))])
    frontier = np.concatenate([p.frontier_mask for p in parts])
    ri, rv = (0, parts[0].root) if root is None else root
    labels = [p.vertex_label for p in parts]

    def vlabel(v, offsets=offsets, labels=labels):
        i = int(np.searchsorted(offsets, v, side="right") - 1)
        return (labels[i](int(v - offsets[i])), i + 1)

    return Graph(indptr, idx, root=int(offsets[ri] + rv), frontier=frontier,
                 label=label or f"stitch of {len(parts)} parts", validate=False,
                 max_vertices=max_vertices, _vertex_label=vlabel, _parts=parts,
                 _part_offsets=offsets, _bridges=tuple(glob))


def glued_double_grid(spec: WindowSpec, max_vertices: int | None = DEFAULT_MAX_VERTICES) -> Graph:
    """Two ``Z^d`` windows joined by one edge between their origins.

    Vertex labels are ``(z, i)`` with ``i`` in ``{1, 2}``; the root is the
    origin of copy 1.
    """
    if max_vertices is not None and 2 * spec.vertex_count > max_vertices:
        raise GraphError(f"glued grid has {2 * spec.vertex_count} vertices, cap is {max_vertices}")
    a = grid_window(spec, max_vertices)
    b = grid_window(spec, max_vertices)
    return stitch([a, b], [((0, a.root), (1, b.root))], label=f"glued Z^{spec.dim} L={spec.radius}",
                  max_vertices=max_vertices)


def tree_ball(branching: int, depth: int, max_vertices: int | None = DEFAULT_MAX_VERTICES) -> Graph:
    """Ball of the ``(b+1)``-regular tree; the root has ``b+1`` children, leaves are the frontier."""
    b = int(branching)
    if b < 2 or depth < 1:
        raise GraphError("tree_ball needs branching >= 2 and depth >= 1")
    count = 1 + (b + 1) * (b**depth - 1) // (b - 1)
    if max_vertices is not None and count > max_vertices:
        raise GraphError(f"tree ball has {count} vertices, cap is {max_vertices}")
    edges = []
    level = [0]
    nxt = 1
    for k in range(depth):
        width = b + 1 if k == 0 else b
        new = []
        for v in level:
            for _ in range(width):
                edges.append((v, nxt))
                new.append(nxt)
                nxt += 1
        level = new
    return Graph.from_edges(count, edges, root=0, frontier=level,
                            label=f"tree b={b} depth={depth}", max_vertices=max_vertices)


def torus(dim: int, radius: int, max_vertices: int | None = DEFAULT_MAX_VERTICES) -> Graph:
    """Periodic ``(2L+1)^d`` torus; finite, regular, no frontier."""
    side = 2 * radius + 1
    if dim < 1 or side < 3:
        raise GraphError("torus needs dim >= 1 and radius >= 1")
    n = side**dim
    if max_vertices is not None and n > max_vertices:
        raise GraphError(f"torus has {n} vertices, cap is {max_vertices}")
    ids = np.arange(n).reshape((side,) * dim)
    edges = []
    for ax in range(dim):
        edges.append(np.stack([ids.ravel(), np.roll(ids, -1, axis=ax).ravel()], axis=1))
    e = np.concatenate(edges)
    e = np.unique(np.sort(e, axis=1), axis=0)
    origin = int(np.ravel_multi_index((radius,) * dim, (side,) * dim))

    def vlabel(v):
        return tuple(int(c) - radius for c in np.unravel_index(v, (side,) * dim))

    g = Graph.from_edges(n, e, root=origin, label=f"torus d={dim} side={side}", max_vertices=max_vertices)
    g._vertex_label = vlabel
    return g


def path_graph(n: int) -> Graph:
    """Path ``0 - 1 - ... - (n-1)``, no frontier."""
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)], label=f"path {n}")


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise GraphError("cycle needs at least 3 vertices")
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)], label=f"cycle {n}")


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)], label=f"K{n}")


def complete_bipartite(m: int, n: int, frontier=()) -> Graph:
    edges = [(i, m + j) for i in range(m) for j in range(n)]
    return Graph.from_edges(m + n, edges, frontier=frontier, label=f"K{m},{n}")


def fuzz(graph: Graph, n: int, max_edges: int = DEFAULT_MAX_EDGES) -> Graph:
    """Join every pair of vertices at graph distance ``<= n``."""
    if n < 1:
        raise GraphError("fuzz parameter must be >= 1")
    if n == 1:
        return Graph(graph.indptr, graph.indices, root=graph.root, frontier=graph.frontier_mask,
                     label=graph.label, validate=False, max_vertices=None)
    N = graph.vertex_count
    rows, cols = [], []
    total = 0
    for x in range(N):
        seen = {x}
        level = np.array([x])
        for _ in range(n):
            nb = np.unique(_gather_neighbors(graph.indptr, graph.indices, level))
            nb = np.array([y for y in nb if y not in seen], dtype=np.int64)
            if nb.size == 0:
                break
            seen.update(nb.tolist())
            level = nb
        s = np.array(sorted(seen - {x}), dtype=np.int64)
        total += s.size
        if total > 2 * max_edges:
            raise GraphError(f"fuzz would exceed {max_edges} edges")
        rows.append(np.full(s.size, x))
        cols.append(s)
    indptr = np.zeros(N + 1, dtype=np.int64)
    np.cumsum([c.size for c in cols], out=indptr[1:])
    return Graph(indptr, np.concatenate(cols), root=graph.root, frontier=graph.frontier_mask,
                 label=f"{graph.label} {n}-fuzz", max_vertices=None)


def bfs_spanning_tree(graph: Graph) -> Graph:
    """Breadth-first spanning tree from the root (no structural guarantee beyond that)."""
    parent = np.full(graph.vertex_count, -1, dtype=np.int64)
    parent[graph.root] = graph.root
    q = deque([graph.root])
    edges = []
    while q:
        x = q.popleft()
        for y in graph.neighbors(x):
            if parent[y] < 0:
                parent[y] = x
                edges.append((x, int(y)))
                q.append(int(y))
    return Graph.from_edges(graph.vertex_count, edges, root=graph.root, frontier=graph.frontier_mask,
                            label=f"BFS tree of {graph.label}", max_vertices=None)


def cayley_ball(identity: Hashable, generators: Sequence[Callable[[Hashable], Hashable]], radius: int,
                max_vertices: int | None = 10**6, label: str = "") -> Graph:
    """Ball of radius ``radius`` around ``identity`` in a Cayley graph.

    Group elements are opaque hashable normal forms; each generator is a map
    ``element -> element * s``. The generator set must be closed under
    inverses, which is checked on every element of the ball. The sphere of
    maximal radius becomes the frontier.
    """
    if radius < 1:
        raise GraphError("radius must be >= 1")
    gens = list(generators)
    ids = {identity: 0}
    elements = [identity]
    dist = [0]
    q = deque([identity])
    while q:
        x = q.popleft()
        dx = dist[ids[x]]
        if dx == radius:
            continue
        for s in gens:
            y = s(x)
            if y not in ids:
                if max_vertices is not None and len(elements) >= max_vertices:
                    raise GraphError(f"Cayley ball exceeds {max_vertices} elements")
                ids[y] = len(elements)
                elements.append(y)
                dist.append(dx + 1)
                q.append(y)
    edges = set()
    for x in elements:
        i = ids[x]
        images = [s(x) for s in gens]
        for y in images:
            if y == x:
                raise GraphError("a generator acts trivially (self-loop)")
            if not any(t(y) == x for t in gens):
                raise GraphError("generating set is not symmetric")
            j = ids.get(y)
            if j is not None:
                edges.add((min(i, j), max(i, j)))
    dist = np.asarray(dist)
    frontier = np.flatnonzero(dist == radius)
    g = Graph.from_edges(len(elements), sorted(edges), root=0, frontier=frontier,
                         label=label or f"Cayley ball r={radius}", max_vertices=max_vertices)
    g._vertex_label = elements.__getitem__
    return g


# -- preset generating sets -------------------------------------------------------


def integer_generators(dim: int = 1):
    """Standard generators ``±e_i`` of ``Z^d`` acting on integer tuples."""
    gens = []
    for i in range(dim):
        for s in (1, -1):
            gens.append(lambda x, i=i, s=s: x[:i] + (x[i] + s,) + x[i + 1:])
    return (0,) * dim, gens


def lamplighter_generators():
    """``Z_2 wr Z`` with ``{t, t^-1, a}``; elements are ``(lit lamps, position)``."""
    identity = (frozenset(), 0)

    def t(x):
        return (x[0], x[1] + 1)

    def t_inv(x):
        return (x[0], x[1] - 1)

    def a(x):
        return (x[0] ^ {x[1]}, x[1])

    return identity, [t, t_inv, a]
