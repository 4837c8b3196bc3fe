"""Plain-text formats for graphs and vertex functions.

Graph files::

    # comments allowed
    vertices 5 root 2
    frontier 0 4
    0 1
    1 2
    ...

Function files are CSV with a ``vertex,value`` header.
"""
from __future__ import annotations

import csv
import io as _io
from pathlib import Path

import numpy as np

from .generators import WindowSpec, glued_double_grid, grid_window, path_graph, torus, tree_ball
from .graph import DEFAULT_MAX_VERTICES, Graph, GraphError, VertexFunction


def read_graph(path, max_vertices: int | None = DEFAULT_MAX_VERTICES) -> Graph:
    n = root = None
    frontier: list[int] = []
    edges = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] == "vertices":
            if len(tok) not in (2, 4) or (len(tok) == 4 and tok[2] != "root"):
                raise GraphError(f"{path}:{lineno}: expected 'vertices N [root R]'")
            n = int(tok[1])
            root = int(tok[3]) if len(tok) == 4 else 0
        elif tok[0] == "frontier":
            frontier.extend(int(t) for t in tok[1:])
        else:
            if len(tok) != 2:
                raise GraphError(f"{path}:{lineno}: expected an edge 'u v'")
            edges.append((int(tok[0]), int(tok[1])))
    if n is None:
        raise GraphError(f"{path}: missing 'vertices' header")
    return Graph.from_edges(n, edges, root=root, frontier=frontier, label=Path(path).name,
                            max_vertices=max_vertices)


def write_graph(graph: Graph, path) -> None:
    buf = _io.StringIO()
    buf.write(f"vertices {graph.vertex_count} root {graph.root}\n")
    if graph.has_frontier:
        buf.write("frontier " + " ".join(str(int(v)) for v in graph.frontier) + "\n")
    for u, v in graph.edges:
        buf.write(f"{u} {v}\n")
    Path(path).write_text(buf.getvalue())


def read_function(graph: Graph, path, partial: bool = False):
    """Read ``vertex,value`` rows; ``partial=True`` returns a dict instead of a full function."""
    vals = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            vals[int(row["vertex"])] = float(row["value"])
    if partial:
        return vals
    if len(vals) != graph.vertex_count or set(vals) != set(range(graph.vertex_count)):
        raise GraphError(f"{path}: function must give a value for each of the {graph.vertex_count} vertices")
    return VertexFunction(graph, np.array([vals[i] for i in range(graph.vertex_count)]))


def write_function(g: VertexFunction, path) -> None:
    write_rows(path, ["vertex", "value"], ((i, repr(float(v))) for i, v in enumerate(g.values)))


def write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_columns(path, xs, ys) -> None:
    """Two whitespace-separated columns, ready for any plotting tool."""
    with open(path, "w") as fh:
        for x, y in zip(xs, ys):
            fh.write(f"{x!r} {y!r}\n")


def graph_from_spec(spec: str, max_vertices: int | None = DEFAULT_MAX_VERTICES) -> Graph:
    """Build a graph from a short description or a file path.

    ``grid:d=2,L=10``, ``glued:d=3,L=6``, ``tree:b=2,depth=5``,
    ``torus:d=2,L=8``, ``path:n=10``; anything else is read as a graph file.
    """
    kind, _, rest = spec.partition(":")
    builders = {"grid", "glued", "tree", "torus", "path"}
    if kind not in builders or not rest:
        return read_graph(spec, max_vertices=max_vertices)
    kw = {}
    for item in rest.split(","):
        key, _, val = item.partition("=")
        if not val:
            raise GraphError(f"bad graph spec item {item!r}")
        kw[key.strip()] = int(val)
    try:
        if kind == "grid":
            return grid_window(WindowSpec(kw["d"], kw["L"]), max_vertices)
        if kind == "glued":
            return glued_double_grid(WindowSpec(kw["d"], kw["L"]), max_vertices)
        if kind == "tree":
            return tree_ball(kw["b"], kw["depth"], max_vertices)
        if kind == "torus":
            return torus(kw["d"], kw["L"], max_vertices)
        return path_graph(kw["n"])
    except KeyError as exc:
        raise GraphError(f"graph spec {spec!r} is missing {exc.args[0]!r}") from None
