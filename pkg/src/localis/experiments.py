"""JSON experiment configs: parsing, operator specs and the experiment runners
used by the command line."""

from __future__ import annotations

import csv
import json
import platform
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np
import scipy

from . import __version__
from .checks import run_suite
from .function_space import GridSpec, SampledFunction, make_grid
from .group_core import Group
from .localization import local_equiv, symbol_field
from .operator_lab import (WindowSpec, enorm_proxy, finite_rank, group_convolution,
                           hilbert_transform, multiplication_operator, shift_operator)
from .localization import invariance_scores
from .synthesis import envelope_refine

EXPERIMENTS = ("symbol-field", "local-equiv", "envelope", "invariance", "verify")
VERDICT_FAILURE = 2


class ConfigError(ValueError):
    """A config that cannot be run; the message names the offending key."""


def _require(cfg: dict, key: str, where: str = "config"):
    if not isinstance(cfg, dict):
        raise ConfigError(f"{where} must be a JSON object")
    if key not in cfg:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return cfg[key]


def load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    kind = _require(cfg, "experiment")
    if kind not in EXPERIMENTS:
        raise ConfigError(f"key 'experiment': unknown kind {kind!r}; expected one of {', '.join(EXPERIMENTS)}")
    return cfg


# ---------------------------------------------------------------------------
# grid, window, lattice


@dataclass
class Setup:
    grid: GridSpec
    window: WindowSpec
    p: float


def build_setup(cfg: dict) -> Setup:
    gdesc = _require(cfg, "group")
    try:
        G = Group.from_dict(gdesc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"key 'group': {exc}") from exc
    g = _require(cfg, "grid")
    try:
        grid = make_grid(G, _require(g, "h", "grid"), _require(g, "R", "grid"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"key 'grid': {exc}") from exc
    w = cfg.get("window", {"radius": 1.0})
    window = WindowSpec(grid, float(w.get("radius", 1.0)))
    return Setup(grid, window, float(cfg.get("p", 2.0)))


def build_lattice(spec, grid: GridSpec) -> np.ndarray:
    """Explicit ``{"points": [...]}`` or a regular ``{"lo", "hi", "step"}`` box."""
    if "points" in spec:
        pts = np.asarray(spec["points"], dtype=float).reshape(-1, grid.dim)
    else:
        lo = np.broadcast_to(np.asarray(_require(spec, "lo", "lattice"), float), (grid.dim,))
        hi = np.broadcast_to(np.asarray(_require(spec, "hi", "lattice"), float), (grid.dim,))
        step = np.broadcast_to(np.asarray(_require(spec, "step", "lattice"), float), (grid.dim,))
        axes = [lo[c] + step[c] * np.arange(int(np.floor((hi[c] - lo[c]) / step[c] + 1e-9)) + 1)
                for c in range(grid.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
    if not np.all(grid.on_lattice(pts)):
        raise ConfigError("key 'lattice': points must lie on the grid lattice")
    return pts


# ---------------------------------------------------------------------------
# operators


FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sin": np.sin,
    "cos": np.cos,
    "x": lambda x: x,
    "tanh": np.tanh,
    "gaussian": lambda x: np.exp(-x ** 2),
}


def sample_function(spec: dict, grid: GridSpec) -> SampledFunction:
    name = _require(spec, "function", "operator")
    if name == "const":
        return SampledFunction(grid, np.full(grid.size, float(spec.get("value", 1.0))))
    if name not in FUNCTIONS:
        raise ConfigError(f"key 'function': unknown function {name!r}; known: const, {', '.join(FUNCTIONS)}")
    coord = int(spec.get("coordinate", 0))
    scale = float(spec.get("scale", 1.0))
    fn = FUNCTIONS[name]
    return SampledFunction.from_callable(grid, lambda p: fn(scale * p[:, coord]))


def build_operator(spec: dict, grid: GridSpec, seed: int = 0) -> np.ndarray:
    kind = _require(spec, "kind", "operator")
    N = grid.size
    if kind == "identity":
        return np.eye(N)
    if kind == "zero":
        return np.zeros((N, N))
    if kind == "multiplication":
        return multiplication_operator(sample_function(spec, grid))
    if kind == "shift":
        return shift_operator(grid, _require(spec, "by", "operator"))
    if kind == "convolution":
        width = float(spec.get("width", 1.0))
        G = grid.group
        kernel = SampledFunction.from_callable(
            grid, lambda p: np.exp(-np.sum((np.abs(p) ** (1.0 / G.degrees)) ** 2, axis=-1) / width ** 2))
        return group_convolution(kernel)
    if kind == "hilbert":
        return hilbert_transform(grid)
    if kind == "finite_rank":
        rank = int(_require(spec, "rank", "operator"))
        rng = np.random.default_rng(int(spec.get("seed", seed)))
        x = grid.points
        cols = [SampledFunction(grid, rng.standard_normal(N) * np.exp(-np.sum(x ** 2, axis=-1)))
                for _ in range(rank)]
        rows = [SampledFunction(grid, rng.standard_normal(N) * np.exp(-np.sum(x ** 2, axis=-1)))
                for _ in range(rank)]
        return finite_rank(cols, rows, grid)
    if kind == "combination":
        out = np.zeros((N, N))
        for i, term in enumerate(_require(spec, "terms", "operator")):
            out = out + float(term.get("coef", 1.0)) * build_operator(_require(term, "operator", f"terms[{i}]"), grid, seed)
        return out
    raise ConfigError(f"key 'kind': unknown operator kind {kind!r}")


def local_rule(spec: dict, grid: GridSpec, seed: int = 0) -> Callable[[np.ndarray], np.ndarray]:
    """g -> local representative. ``frozen`` freezes a multiplication symbol at g;
    ``constant`` returns the same operator everywhere."""
    kind = _require(spec, "kind", "local_rule")
    I = np.eye(grid.size)
    if kind == "frozen":
        fspec = _require(spec, "operator", "local_rule")
        name = _require(fspec, "function", "local_rule.operator")
        if name == "const":
            v = float(fspec.get("value", 1.0))
            return lambda g: v * I
        fn = FUNCTIONS[name]
        coord = int(fspec.get("coordinate", 0))
        scale = float(fspec.get("scale", 1.0))
        return lambda g: float(fn(scale * np.asarray(g)[coord])) * I
    if kind == "constant":
        A = build_operator(_require(spec, "operator", "local_rule"), grid, seed)
        return lambda g: A
    raise ConfigError(f"key 'local_rule.kind': unknown rule {kind!r}")


# ---------------------------------------------------------------------------
# outputs


def versions() -> dict:
    return {
        "localis": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def write_manifest(out: Path, cfg: dict, extra: dict | None = None):
    man = {"config": cfg, "versions": versions(), "seed": int(cfg.get("seed", 0))}
    if extra:
        man.update(extra)
    (out / "manifest.json").write_text(json.dumps(man, indent=2, sort_keys=True) + "\n")


def write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, header: list, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


# ---------------------------------------------------------------------------
# runners; each returns (exit status, summary dict)


def _t_levels(cfg) -> list:
    t = [float(v) for v in _require(cfg, "t_levels")]
    if not t:
        raise ConfigError("key 't_levels': at least one level is required")
    if any(b >= a for a, b in zip(t, t[1:])):
        raise ConfigError("key 't_levels': levels must be strictly decreasing")
    return t


def run_symbol_field(cfg, out: Path) -> tuple[int, dict]:
    S = build_setup(cfg)
    A = build_operator(_require(cfg, "operator"), S.grid, int(cfg.get("seed", 0)))
    t = _t_levels(cfg)
    lattice = build_lattice(_require(cfg, "lattice"), S.grid)
    rank = int(cfg.get("rank", 0))
    sf = symbol_field(A, S.window, t, lattice, S.p)
    sf.save(out / "field")
    rows = []
    for (i, j) in sorted(sf.blocks):
        rows.append([t[i], j, *lattice[j], enorm_proxy(sf.blocks[(i, j)], rank)])
    write_csv(out / "decay.csv", ["t", "g_index", *[f"g{c}" for c in range(S.grid.dim)], "enorm_proxy"], rows)
    summary = {"levels": len(t), "lattice_points": len(lattice), "blocks": len(sf.blocks), "rank": rank}
    write_json(out / "results.json", summary)
    return 0, summary


def run_local_equiv(cfg, out: Path) -> tuple[int, dict]:
    S = build_setup(cfg)
    seed = int(cfg.get("seed", 0))
    A = build_operator(_require(cfg, "operator"), S.grid, seed)
    B = build_operator(_require(cfg, "operator_b"), S.grid, seed)
    t = _t_levels(cfg)
    point = _require(cfg, "point")
    rep = local_equiv(A, B, point, S.window, t, rank=int(cfg.get("rank", 0)),
                      tol=float(cfg.get("tolerance", 1e-2)), p=S.p)
    write_json(out / "report.json", rep.to_dict())
    write_csv(out / "decay.csv", ["t", "enorm_proxy"], zip(rep.t_levels, rep.decay))
    expectation = bool(cfg.get("expectation", True))
    summary = {"verdict": rep.verdict, "expectation": expectation}
    write_json(out / "results.json", summary)
    return (0 if rep.verdict == expectation else VERDICT_FAILURE), summary


def run_envelope(cfg, out: Path) -> tuple[int, dict]:
    S = build_setup(cfg)
    seed = int(cfg.get("seed", 0))
    A = build_operator(_require(cfg, "operator"), S.grid, seed)
    rule = local_rule(_require(cfg, "local_rule"), S.grid, seed)
    box = _require(cfg, "box")
    lo, hi = _require(box, "lo", "box"), _require(box, "hi", "box")
    depths = [int(d) for d in _require(cfg, "depths")]
    rows = envelope_refine(A, rule, S.grid, lo, hi, depths, rank=int(cfg.get("rank", 0)))
    write_csv(out / "convergence.csv", ["depth", "norm", "proxy"],
              [[r["depth"], r["norm"], r["proxy"]] for r in rows])
    ratios = [b["norm"] / a["norm"] if a["norm"] > 0 else 0.0 for a, b in zip(rows, rows[1:])]
    summary = {"table": rows, "ratios": ratios}
    status = 0
    band = cfg.get("expected_ratio")
    if band is not None:
        ok = all(band[0] <= r <= band[1] for r in ratios)
        summary["verdict"] = ok
        status = 0 if ok else VERDICT_FAILURE
    write_json(out / "results.json", summary)
    return status, summary


def run_invariance(cfg, out: Path) -> tuple[int, dict]:
    S = build_setup(cfg)
    A = build_operator(_require(cfg, "operator"), S.grid, int(cfg.get("seed", 0)))
    ts = [float(v) for v in _require(cfg, "t_samples")]
    gs = np.asarray(_require(cfg, "g_samples"), float)
    homog, shift = invariance_scores(A, S.grid, ts, gs, margin=float(cfg.get("margin", 2.0)), p=S.p)
    summary = {"homogeneity": homog, "shift": shift}
    status = 0
    limits = cfg.get("max_scores")
    if limits is not None:
        ok = homog <= float(limits.get("homogeneity", np.inf)) and shift <= float(limits.get("shift", np.inf))
        summary["verdict"] = bool(ok)
        status = 0 if ok else VERDICT_FAILURE
    write_json(out / "results.json", summary)
    return status, summary


def verify_report(suite: str) -> tuple[int, dict]:
    try:
        results = run_suite(suite)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from exc
    report = {"suite": suite, "properties": [r.to_dict() for r in results],
              "passed": all(r.passed for r in results)}
    return (0 if report["passed"] else VERDICT_FAILURE), report


def run_verify(cfg, out: Path) -> tuple[int, dict]:
    status, report = verify_report(cfg.get("suite", "all"))
    write_json(out / "report.json", report)
    return status, {"passed": report["passed"], "count": len(report["properties"])}


RUNNERS: dict[str, Callable[[dict, Path], tuple[int, dict]]] = {
    "symbol-field": run_symbol_field,
    "local-equiv": run_local_equiv,
    "envelope": run_envelope,
    "invariance": run_invariance,
    "verify": run_verify,
}


def run_config(cfg: dict, out: Path) -> tuple[int, dict]:
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out, cfg)
    return RUNNERS[cfg["experiment"]](cfg, out)


def as_builtin(obj: Any):
    """JSON-friendly copy (numpy scalars to Python)."""
    return json.loads(json.dumps(obj, default=float))
