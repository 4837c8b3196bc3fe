"""Named experiments with deterministic file output.

Each run writes ``<name>.json`` (config, library version, verdicts and
witnesses) plus CSV tables and two-column ``.dat`` files for every
sequence into the output directory. Nothing time- or host-dependent is
written, so a fixed config reproduces the files byte for byte.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .boundary import boundary_value, glued_green_example, harmonic_residual
from .cohomology import (INCONCLUSIVE, NONTRIVIAL, TRIVIAL, Exhaustion, constant_at_infinity, ends,
                         stitched_classification)
from .generators import WindowSpec, grid_window, torus
from .graph import VertexFunction, _lp, gradient, lp_norm_edges
from .io import write_columns, write_rows
from .walk import WalkKernel, _measures, fit_decay

EXPERIMENTS = ("heat-decay", "glued-example", "liouville-vanishing", "injection-diagnostic")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    name: str
    graph: str | None = None
    d: int = 5
    L: int = 14
    N: int | None = None
    p: float = 2.0
    q: float = 1.0
    alpha: float = 0.0
    tol: float = 1e-9
    radii: tuple | None = None
    seed: int = 0
    count: int = 20
    n_min: int = 10
    n_max: int = 24
    n_step: int = 2
    out: str = "results"
    max_vertices: int = 30_000_000
    pairs: tuple = field(default_factory=tuple)

    def validate(self) -> "ExperimentConfig":
        if self.name not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.name!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.d < 1 or self.L < 1:
            raise ConfigError("d and L must be positive")
        if not 0 <= self.alpha < 1:
            raise ConfigError("alpha must lie in [0, 1)")
        if self.tol <= 0:
            raise ConfigError("tol must be positive")
        if self.p < 1 or self.q < 1:
            raise ConfigError("p and q must be >= 1")
        if self.count < 0:
            raise ConfigError("count must be >= 0")
        if self.radii is not None:
            r = tuple(int(x) for x in self.radii)
            if any(b <= a for a, b in zip(r, r[1:])):
                raise ConfigError("radii must be strictly increasing")
            self.radii = r
        if self.name == "heat-decay":
            if not 0 < self.n_min <= self.n_max or self.n_step < 1:
                raise ConfigError("need 0 < n_min <= n_max and n_step >= 1")
            # a value at the origin is certified only while n < 2L
            if self.n_max >= 2 * self.L:
                raise ConfigError(f"window too small for the fit range: n_max={self.n_max} needs n_max < 2L = {2 * self.L}")
        if self.name in ("glued-example", "injection-diagnostic") and self.d < 3:
            raise ConfigError("the glued example needs d >= 3")
        if self.name == "injection-diagnostic":
            for q, p in self.pair_list():
                if not q <= p < self.d / 2:
                    raise ConfigError(f"need q <= p < d/2, got q={q}, p={p}, d={self.d}")
        return self

    def pair_list(self) -> list[tuple[float, float]]:
        return [tuple(map(float, pr)) for pr in self.pairs] or [(self.q, self.p)]

    def as_dict(self) -> dict:
        d = asdict(self)
        d["radii"] = None if self.radii is None else list(self.radii)
        d["pairs"] = [list(p) for p in self.pairs]
        return d

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass
class RunResult:
    name: str
    exit_code: int
    files: list
    summary: dict


def _clean(obj):
    """Make numpy scalars/arrays and non-finite floats JSON friendly."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def _write_json(path: Path, cfg: ExperimentConfig, body: dict) -> None:
    doc = {"experiment": cfg.name, "version": __version__, "config": cfg.as_dict(), **body}
    path.write_text(json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n")


def _digest(a: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(a, dtype=np.float64).tobytes()).hexdigest()


def _exit_code(verdicts) -> int:
    return 2 if INCONCLUSIVE in verdicts else 0


# --- heat decay -----------------------------------------------------------------------------

def run_heat_decay(cfg: ExperimentConfig) -> RunResult:
    cfg.validate()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    g = grid_window(WindowSpec(cfg.d, cfg.L), max_vertices=cfg.max_vertices)
    k = WalkKernel(g, cfg.alpha)
    x = g.root
    fd = g.frontier_distance
    want = set(range(cfg.n_min, cfg.n_max + 1, cfg.n_step))
    rows = []
    for n, m in _measures(k, x, cfg.n_max):
        y = int(np.argmax(m))
        rows.append((n, float(m[y]), y, bool(n < fd[x] + fd[y]), _lp(m, 2.0)))
    pts = [(n, s) for n, s, _, c, _ in rows if n in want]
    certified = all(c for n, _, _, c, _ in rows if n in want)
    body = {"sequence": {"n": [r[0] for r in rows], "sup": [r[1] for r in rows],
                         "certified": [r[3] for r in rows], "l2": [r[4] for r in rows]}}
    code = 0
    try:
        fit = fit_decay(pts, (cfg.n_min, cfg.n_max))
        body["fit"] = {"exponent": fit.exponent, "constant": fit.constant, "window": list(fit.window),
                       "residual": fit.residual, "points": fit.points, "certified": certified,
                       "predicted": -cfg.d / 2}
        if not certified:
            code = 1
            body["error"] = "fit window leaves the certified exactness range"
    except ValueError as exc:
        code = 1
        body["error"] = str(exc)
    files = [out / "heat-decay.json", out / "heat-decay.csv", out / "heat-decay-sup.dat", out / "heat-decay-l2.dat"]
    _write_json(files[0], cfg, body)
    write_rows(files[1], ["n", "sup", "argmax", "certified", "l2"],
               [(n, repr(s), y, int(c), repr(l2)) for n, s, y, c, l2 in rows])
    write_columns(files[2], [r[0] for r in rows], [r[1] for r in rows])
    write_columns(files[3], [r[0] for r in rows], [r[4] for r in rows])
    return RunResult(cfg.name, code, [str(f) for f in files], body.get("fit", {}))


# --- glued example ----------------------------------------------------------------------------

def _glued_evidence(ex, g: VertexFunction, cfg: ExperimentConfig, ends_report) -> dict:
    graph = ex.graph
    k = WalkKernel(graph, 0.5, dirichlet=True)
    bv = boundary_value(k, g, tol=cfg.tol)
    off = graph.part_offsets
    lim = bv.limit.values
    plateaus = []
    for i in range(len(off) - 1):
        part = graph.parts[i]
        outer = part.frontier_distance <= 1
        plateaus.append(float(np.median(lim[off[i]:off[i + 1]][outer])))
    cai = constant_at_infinity(g, ends_report.exhaustion)
    sc = stitched_classification(None, graph, g, radii=cfg.radii)
    return {
        "residual": harmonic_residual(WalkKernel(graph), g),
        "gradient_norm": lp_norm_edges(gradient(g), cfg.p),
        "boundary_value": {"iterations": bv.iterations, "sup_increment": bv.sup_increment,
                           "residual": bv.residual, "converged": bv.converged, "plateaus": plateaus,
                           "digest": _digest(lim)},
        "constant_at_infinity": {"verdict": cai.verdict, "witnesses": cai.witnesses},
        "classification": {"verdict": sc.verdict, "witnesses": sc.witnesses},
    }


def run_glued_example(cfg: ExperimentConfig) -> RunResult:
    cfg.validate()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    ex = glued_green_example(cfg.d, cfg.L, cfg.N, max_vertices=cfg.max_vertices)
    er = ends(ex.graph, Exhaustion(ex.graph, cfg.radii))
    main = _glued_evidence(ex, ex.function, cfg, er)
    control = _glued_evidence(ex, VertexFunction.constant(ex.graph, 1.0), cfg, er)
    body = {
        "K": ex.K,
        "green_steps": ex.steps,
        "ends": {"count": er.count, "counts": list(er.counts), "radii": list(er.radii), "stable": er.stable,
                 "flagged": er.flagged, "stabilization_radius": er.stabilization_radius},
        "function": main,
        "control": control,
    }
    # profile of g along the first axis of each copy
    L, d = cfg.L, cfg.d
    axis = np.arange(-L, L + 1)
    idx = [np.ravel_multi_index(tuple([a + L] + [L] * (d - 1)), (2 * L + 1,) * d) for a in axis]
    n1 = ex.graph.part_offsets[1]
    prof1 = ex.function.values[idx]
    prof2 = ex.function.values[np.asarray(idx) + n1]
    files = [out / "glued-example.json", out / "glued-example-axis.csv",
             out / "glued-example-copy1.dat", out / "glued-example-copy2.dat"]
    _write_json(files[0], cfg, body)
    write_rows(files[1], ["z1", "copy1", "copy2"], [(int(a), repr(float(u)), repr(float(v)))
                                                     for a, u, v in zip(axis, prof1, prof2)])
    write_columns(files[2], axis.tolist(), prof1.tolist())
    write_columns(files[3], axis.tolist(), prof2.tolist())
    verdicts = [main["classification"]["verdict"], control["classification"]["verdict"]]
    code = _exit_code(verdicts)
    return RunResult(cfg.name, code, [str(f) for f in files],
                     {"ends": er.count, "verdict": verdicts[0], "control": verdicts[1]})


# --- Liouville vanishing on a torus ------------------------------------------------------------

def run_liouville_vanishing(cfg: ExperimentConfig) -> RunResult:
    cfg.validate()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    g = torus(cfg.d, cfg.L, max_vertices=cfg.max_vertices)
    alpha = cfg.alpha if cfg.alpha > 0 else 0.5
    k = WalkKernel(g, alpha)
    rng = np.random.default_rng(cfg.seed)
    tests = [(f"random-{i}", rng.uniform(-1.0, 1.0, g.vertex_count)) for i in range(cfg.count)]
    coords = np.array([g.vertex_label(v) for v in range(g.vertex_count)])
    tests.append(("coordinate-indicator", (coords[:, 0] >= 0).astype(float)))
    tests.append(("delta", VertexFunction.delta(g, g.root).values))
    ex = Exhaustion(g, cfg.radii)
    rows, verdicts = [], []
    for name, vals in tests:
        f = VertexFunction(g, vals)
        bv = boundary_value(k, f, tol=cfg.tol * 1e-2)
        lim = bv.limit.values
        mean = float(vals.mean())
        spread = float(lim.max() - lim.min())
        dev = float(np.max(np.abs(lim - mean)))
        constant = bv.converged and spread <= 1e-8 and dev <= 1e-8
        diff = constant_at_infinity(f - bv.limit, ex)
        verdict = TRIVIAL if constant else INCONCLUSIVE
        verdicts.append(verdict)
        rows.append({"function": name, "mean": mean, "spread": spread, "deviation_from_mean": dev,
                     "iterations": bv.iterations, "converged": bv.converged, "verdict": verdict,
                     "difference_sup_outside": diff.witnesses.get("sup_outside")})
    files = [out / "liouville-vanishing.json", out / "liouville-vanishing.csv",
             out / "liouville-vanishing-spread.dat"]
    _write_json(files[0], cfg, {"alpha": alpha, "functions": rows})
    write_rows(files[1], ["function", "mean", "spread", "deviation", "iterations", "verdict"],
               [(r["function"], repr(r["mean"]), repr(r["spread"]), repr(r["deviation_from_mean"]),
                 r["iterations"], r["verdict"]) for r in rows])
    write_columns(files[2], list(range(len(rows))), [r["spread"] for r in rows])
    return RunResult(cfg.name, _exit_code(verdicts), [str(f) for f in files],
                     {"functions": len(rows), "constant": sum(v == TRIVIAL for v in verdicts)})


# --- injection diagnostic -------------------------------------------------------------------------

def run_injection_diagnostic(cfg: ExperimentConfig) -> RunResult:
    """Evidence at exponent ``q`` and again at ``p``: the boundary value never consults the exponent."""
    cfg.validate()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    ex = glued_green_example(cfg.d, cfg.L, cfg.N, max_vertices=cfg.max_vertices)
    er = ends(ex.graph, Exhaustion(ex.graph, cfg.radii))
    funcs = [("glued", ex.function), ("constant", VertexFunction.constant(ex.graph, 1.0))]
    table, verdicts = [], []
    for fname, f in funcs:
        cache = {}
        for q, p in cfg.pair_list():
            rec = {}
            for label, e in (("at_q", q), ("at_p", p)):
                if e not in cache:
                    cache[e] = _glued_evidence(ex, f, replace(cfg, p=e), er)
                ev = cache[e]
                rec[label] = {"exponent": e, "verdict": ev["classification"]["verdict"],
                              "gradient_norm": ev["gradient_norm"], "digest": ev["boundary_value"]["digest"]}
                verdicts.append(ev["classification"]["verdict"])
            rec["same_boundary_value"] = rec["at_q"]["digest"] == rec["at_p"]["digest"]
            rec["consistent"] = rec["same_boundary_value"] and rec["at_q"]["verdict"] == rec["at_p"]["verdict"]
            table.append({"function": fname, "q": q, "p": p, **rec})
    files = [out / "injection-diagnostic.json", out / "injection-diagnostic.csv"]
    _write_json(files[0], cfg, {"ends": er.count, "table": table})
    write_rows(files[1], ["function", "q", "p", "verdict_q", "verdict_p", "same_boundary_value"],
               [(r["function"], r["q"], r["p"], r["at_q"]["verdict"],
                 r["at_p"]["verdict"], int(r["same_boundary_value"])) for r in table])
    code = _exit_code(verdicts)
    if not all(r["consistent"] for r in table):
        code = 1
    return RunResult(cfg.name, code, [str(f) for f in files],
                     {"rows": len(table), "consistent": all(r["consistent"] for r in table),
                      "nontrivial": sum(v == NONTRIVIAL for v in verdicts)})


RUNNERS = {
    "heat-decay": run_heat_decay,
    "glued-example": run_glued_example,
    "liouville-vanishing": run_liouville_vanishing,
    "injection-diagnostic": run_injection_diagnostic,
}


def run(cfg: ExperimentConfig) -> RunResult:
    cfg.validate()
    return RUNNERS[cfg.name](cfg)
