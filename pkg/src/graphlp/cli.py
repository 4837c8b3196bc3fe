"""Command line front end: ``graphlp <subcommand> ...``.

Every flag can also come from ``--config FILE``, a flat ``key=value`` file
(``#`` comments allowed); flags given on the command line win. The
``GPL_THREADS`` environment variable caps BLAS/OpenMP threads.

Exit codes: 0 success, 2 when an inconclusive verdict is present, 1 on errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .graph import GraphError, VertexFunction

EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2


def _floats(s: str) -> tuple:
    return tuple(float(x) for x in s.split(",") if x.strip())


def _ints(s: str) -> tuple:
    return tuple(int(x) for x in s.split(",") if x.strip())


def _pairs(s: str) -> tuple:
    """``"1:2,1.5:2"`` -> ``((1.0, 2.0), (1.5, 2.0))``."""
    out = []
    for item in s.split(","):
        if item.strip():
            q, _, p = item.partition(":")
            out.append((float(q), float(p)))
    return tuple(out)


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {s!r}")


def _emit(obj, path=None) -> None:
    from .experiments import _clean
    text = json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _graph(args):
    from .io import graph_from_spec
    return graph_from_spec(args.graph, max_vertices=args.max_vertices)


# --- subcommands -------------------------------------------------------------------------------

def cmd_graph(args) -> int:
    g = _graph(args)
    if args.write:
        from .io import write_graph
        write_graph(g, args.write)
    _emit({"label": g.label, "vertices": g.vertex_count, "edges": g.edge_count, "root": g.root,
           "frontier": int(g.frontier_mask.sum()), "min_degree": g.min_degree, "max_degree": g.max_degree,
           "root_frontier_distance": float(g.frontier_distance[g.root])}, args.json)
    return EXIT_OK


def cmd_walk(args) -> int:
    from .walk import WalkKernel, _measures, fit_decay, exactness_radius
    from .graph import _lp
    g = _graph(args)
    k = WalkKernel(g, args.lazy, args.dirichlet)
    x = g.root if args.start is None else args.start
    fd = g.frontier_distance
    rows = []
    for n, m in _measures(k, x, args.steps):
        y = int(np.argmax(m))
        rows.append({"n": n, "sup": float(m[y]), "argmax": y, "certified": bool(n < fd[x] + fd[y]),
                     "norm": _lp(m, args.p_prime)})
    out = {"start": x, "exactness_radius": exactness_radius(g, x), "p_prime": args.p_prime, "sequence": rows}
    if args.fit:
        lo, hi = args.fit
        fit = fit_decay([(r["n"], r["sup"]) for r in rows if (r["n"] - lo) % args.fit_step == 0], (lo, hi))
        out["fit"] = {"exponent": fit.exponent, "constant": fit.constant, "residual": fit.residual,
                      "points": fit.points,
                      "certified": all(r["certified"] for r in rows if lo <= r["n"] <= hi)}
    _emit(out, args.json)
    return EXIT_OK


def cmd_transport(args) -> int:
    from .transport import transport_norm_bound, walk_transport
    from .walk import WalkKernel
    g = _graph(args)
    k = WalkKernel(g, args.lazy, args.dirichlet)
    x = g.root if args.start is None else args.start
    tau = walk_transport(k, x, args.n, args.kk)
    norm, bound = transport_norm_bound(k, x, args.n, args.kk, args.p_prime)
    _emit({"start": x, "n": args.n, "kk": args.kk, "p_prime": args.p_prime, "norm": norm, "bound": bound,
           "identity_error": tau.identity_error()}, args.json)
    return EXIT_OK


def cmd_boundary(args) -> int:
    from .boundary import boundary_value
    from .io import read_function, write_function
    from .walk import WalkKernel
    g = _graph(args)
    f = read_function(g, args.fn)
    rep = boundary_value(WalkKernel(g, args.lazy, args.dirichlet), f, tol=args.tol, max_n=args.max_n)
    if args.out_fn:
        write_function(rep.limit, args.out_fn)
    _emit({"iterations": rep.iterations, "sup_increment": rep.sup_increment,
           "exactness_radius": rep.exactness_radius, "residual": rep.residual, "converged": rep.converged,
           "limit_min": float(rep.limit.values.min()), "limit_max": float(rep.limit.values.max())}, args.json)
    return EXIT_OK if rep.converged else EXIT_INCONCLUSIVE


def cmd_ends(args) -> int:
    from .cohomology import Exhaustion, ends
    g = _graph(args)
    r = ends(g, Exhaustion(g, args.radii))
    _emit({"count": r.count, "counts": r.counts, "radii": r.radii, "stable": r.stable, "flagged": r.flagged,
           "stabilization_radius": r.stabilization_radius,
           "representative_sizes": [len(x) for x in r.representatives]}, args.json)
    return EXIT_INCONCLUSIVE if r.flagged else EXIT_OK


def cmd_classify(args) -> int:
    from .cohomology import INCONCLUSIVE, Exhaustion, constant_at_infinity, stitched_classification
    from .graph import lp_norm_edges, gradient
    from .io import read_function
    g = _graph(args)
    f = read_function(g, args.fn)
    if g.parts is not None:
        v = stitched_classification(None, g, f, eps_grid=args.eps, radii=args.radii)
    else:
        v = constant_at_infinity(f, Exhaustion(g, args.radii), args.eps)
    _emit({"verdict": v.verdict, "witnesses": v.witnesses, "parameters": v.parameters, "p": args.p,
           "gradient_norm": lp_norm_edges(gradient(f), args.p)}, args.json)
    return EXIT_INCONCLUSIVE if v.verdict == INCONCLUSIVE else EXIT_OK


def cmd_pharmonic(args) -> int:
    from .cohomology import p_harmonic_solve
    from .io import read_function, write_function
    g = _graph(args)
    data = read_function(g, args.boundary, partial=True)
    r = p_harmonic_solve(g, args.p, data, tol=args.tol, max_iter=args.max_iter)
    if args.out_fn:
        write_function(r.function, args.out_fn)
    _emit({"p": r.p, "residual": r.residual, "energy": r.energy, "iterations": r.iterations,
           "converged": r.converged}, args.json)
    return EXIT_OK if r.converged else EXIT_INCONCLUSIVE


def cmd_isoperimetry(args) -> int:
    from .io import write_rows
    from .isoperimetry import profile_scan
    g = _graph(args)
    s = profile_scan(g, args.mode, args.samples, args.seed)
    rows = [(int(a), int(b), repr(float(r))) for a, b, r in zip(s.sizes, s.boundaries, s.ratios)]
    if args.out:
        write_rows(args.out, ["size", "boundary", "ratio"], rows)
    else:
        import csv
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["size", "boundary", "ratio"])
        w.writerows(rows)
    return EXIT_OK


def cmd_experiment(args) -> int:
    from .experiments import ExperimentConfig, run
    kw = {k: getattr(args, k) for k in ExperimentConfig.field_names() if k != "name" and getattr(args, k, None) is not None}
    cfg = ExperimentConfig(name=args.experiment, **kw)
    res = run(cfg)
    _emit({"experiment": res.name, "exit_code": res.exit_code, "files": res.files, "summary": res.summary})
    return res.exit_code


# --- parser ---------------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="graphlp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"graphlp {__version__}")
    p.add_argument("--config", help="flat key=value file supplying defaults for any flag")
    sub = p.add_subparsers(dest="command", required=True)

    def with_graph(sp):
        # required, but checked after --config is merged
        sp.add_argument("--graph",
                        help="graph file or builder spec such as grid:d=2,L=10 / glued:d=3,L=6 / tree:b=2,depth=5")
        sp.add_argument("--max-vertices", type=int, default=10**7)
        sp.add_argument("--json", help="write the JSON report here instead of stdout")
        return sp

    def kernel_flags(sp, lazy=0.0):
        sp.add_argument("--lazy", type=float, default=lazy, help="laziness α of the walk")
        sp.add_argument("--dirichlet", type=_bool, nargs="?", const=True, default=False,
                        help="absorb the walk at the frontier")
        sp.add_argument("--start", type=int, help="start vertex (default: root)")

    s = with_graph(sub.add_parser("graph", help="describe a graph"))
    s.add_argument("--write", help="write the graph as an edge-list file")
    s.set_defaults(func=cmd_graph)

    s = with_graph(sub.add_parser("walk", help="n-step distributions, sup and norm sequences"))
    kernel_flags(s)
    s.add_argument("--steps", type=int, default=20)
    s.add_argument("--p-prime", type=float, default=2.0)
    s.add_argument("--fit", type=_ints, help="lo,hi: fit sup P^(n) ~ K n^a on this range")
    s.add_argument("--fit-step", type=int, default=2)
    s.set_defaults(func=cmd_walk)

    s = with_graph(sub.add_parser("transport", help="walk transport norm and its bound"))
    kernel_flags(s)
    s.add_argument("--n", type=int, default=0)
    s.add_argument("--kk", type=int, default=1)
    s.add_argument("--p-prime", type=float, default=2.0)
    s.set_defaults(func=cmd_transport)

    s = with_graph(sub.add_parser("boundary", help="boundary value of a function"))
    kernel_flags(s, lazy=0.5)
    s.add_argument("--fn", required=True, help="CSV vertex,value")
    s.add_argument("--tol", type=float, default=1e-9)
    s.add_argument("--max-n", type=int)
    s.add_argument("--out-fn", help="write the limit function as CSV")
    s.set_defaults(func=cmd_boundary)

    s = with_graph(sub.add_parser("ends", help="count ends through an exhaustion"))
    s.add_argument("--radii", type=_ints)
    s.set_defaults(func=cmd_ends)

    s = with_graph(sub.add_parser("classify", help="constant-at-infinity verdict for a function"))
    s.add_argument("--fn", required=True)
    s.add_argument("--p", type=float, default=2.0)
    s.add_argument("--radii", type=_ints)
    s.add_argument("--eps", type=_floats, default=(0.1, 0.03, 0.01))
    s.set_defaults(func=cmd_classify)

    s = with_graph(sub.add_parser("pharmonic", help="p-harmonic extension of frontier data"))
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--boundary", required=True, help="CSV vertex,value covering the frontier")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--max-iter", type=int, default=500)
    s.add_argument("--out-fn")
    s.set_defaults(func=cmd_pharmonic)

    s = with_graph(sub.add_parser("isoperimetry", help="sampled isoperimetric ratios as CSV"))
    s.add_argument("--mode", default="omega", help="omega or d=<dimension>")
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="CSV path (default: stdout)")
    s.set_defaults(func=cmd_isoperimetry)

    s = sub.add_parser("experiment", help="run a named experiment")
    s.add_argument("experiment", choices=("heat-decay", "glued-example", "liouville-vanishing",
                                          "injection-diagnostic"))
    s.add_argument("--graph")
    s.add_argument("--d", type=int)
    s.add_argument("--L", type=int)
    s.add_argument("--N", type=int)
    s.add_argument("--p", type=float)
    s.add_argument("--q", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--tol", type=float)
    s.add_argument("--radii", type=_ints)
    s.add_argument("--seed", type=int)
    s.add_argument("--count", type=int)
    s.add_argument("--n-min", type=int)
    s.add_argument("--n-max", type=int)
    s.add_argument("--n-step", type=int)
    s.add_argument("--out")
    s.add_argument("--max-vertices", type=int)
    s.add_argument("--pairs", type=_pairs, help="q:p pairs, e.g. 1:2,1.5:2")
    s.set_defaults(func=cmd_experiment)
    return p


def read_config(path) -> dict:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def _apply_config(parser, args, argv) -> None:
    """Fill flags absent from ``argv`` with values from the config file."""
    cfg = read_config(args.config)
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sp = sub.choices[args.command]
    given = {tok.split("=", 1)[0] for tok in argv if tok.startswith("--")}
    actions = {a.dest: a for a in sp._actions if a.option_strings}
    for key, val in cfg.items():
        a = actions.get(key)
        if a is None:
            raise ValueError(f"config key {key!r} is not a flag of '{args.command}'")
        if any(o in given for o in a.option_strings):
            continue
        setattr(args, key, a.type(val) if a.type else val)


def _thread_limit():
    n = os.environ.get("GPL_THREADS")
    if not n:
        return None
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=max(1, int(n)))


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    limiter = None
    try:
        limiter = _thread_limit()
        if args.config:
            _apply_config(parser, args, argv)
        if args.command != "experiment" and not args.graph:
            raise ValueError("--graph is required (on the command line or in --config)")
        return args.func(args)
    except (GraphError, ValueError, OSError, KeyError) as exc:
        print(f"graphlp: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    finally:
        if limiter is not None:
            limiter.unregister()
