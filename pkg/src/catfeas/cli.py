"""Command line front end: ``catfeas solve|diagnose|estimate-cm|scenario``.

Exit codes: 0 success, 1 configuration or geometry error, 2 the solve hit
``max_iterations``, 3 a diagnostic inequality failed. Errors go to stderr as
one JSON line.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .convex_sets import GeodesicBall, GeodesicSegment, SphericalHull, check_set_in_space
from .errors import CatFeasError, ConfigError
from .model_space import ModelSpace
from .scenarios import BUILTIN, ScenarioSpec
from .solver import (
    SolverConfig,
    StopReason,
    alternate,
    diagnose,
    estimate_c_m,
)

EXIT_OK, EXIT_ERROR, EXIT_MAX_ITER, EXIT_ASSERTION = 0, 1, 2, 3
DEFAULT_SOLVER = {"max_iterations": 10_000, "step_tolerance": 1e-10, "oracle_grid": 200}

log = logging.getLogger("catfeas")


@dataclass
class ProblemConfig:
    scenario: ScenarioSpec
    solver: SolverConfig
    seed: int = 0


# -- config parsing -------------------------------------------------------------

def _vector(value, field):
    if not isinstance(value, list) or not value or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise ConfigError("expected a non-empty list of numbers", field)
    v = np.array(value, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ConfigError(f"not a unit vector (norm {float(np.linalg.norm(v))!r})", field)
    return v


def _number(obj, key, field, kind=float):
    if key not in obj:
        raise ConfigError("missing", f"{field}.{key}")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or (kind is int and int(v) != v):
        raise ConfigError(f"expected {kind.__name__}", f"{field}.{key}")
    return kind(v)


def _set(obj, field):
    if not isinstance(obj, dict) or "type" not in obj:
        raise ConfigError("expected an object with a 'type'", field)
    kind = obj["type"]
    if kind == "ball":
        return GeodesicBall(_vector(obj.get("center"), f"{field}.center"), _number(obj, "radius", field))
    if kind == "segment":
        return GeodesicSegment(_vector(obj.get("a"), f"{field}.a"), _vector(obj.get("b"), f"{field}.b"))
    if kind == "hull":
        gens = obj.get("generators")
        if not isinstance(gens, list) or not gens:
            raise ConfigError("expected a non-empty list of generators", f"{field}.generators")
        return SphericalHull([_vector(g, f"{field}.generators[{i}]") for i, g in enumerate(gens)])
    raise ConfigError(f"unknown set type {kind!r}", f"{field}.type")


def _field_errors(field):
    """Re-raise library validation errors as ConfigError tagged with ``field``."""

    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, (CatFeasError, ValueError)) and not isinstance(exc, ConfigError):
                raise ConfigError(str(exc), field) from exc
            return False

    return _Ctx()


def parse_config(doc: dict) -> ProblemConfig:
    if not isinstance(doc, dict):
        raise ConfigError("top level must be an object")
    for key in ("space", "set_a", "set_b", "x0"):
        if key not in doc:
            raise ConfigError("missing", key)
    sp = doc["space"]
    if not isinstance(sp, dict):
        raise ConfigError("expected an object", "space")
    center = _vector(sp.get("cap_center"), "space.cap_center")
    c_m = sp.get("c_m")
    with _field_errors("space"):
        space = ModelSpace(_number(sp, "kappa", "space"), center.size - 1, center,
                           _number(sp, "cap_radius", "space"),
                           None if c_m is None else _number(sp, "c_m", "space"))
    sets = []
    for key in ("set_a", "set_b"):
        with _field_errors(key):
            s = _set(doc[key], key)
            check_set_in_space(space, s)
        sets.append(s)
    x0 = _vector(doc["x0"], "x0")
    with _field_errors("x0"):
        space.require_in_cap(x0)
    witnesses = doc.get("witnesses", [])
    if not isinstance(witnesses, list):
        raise ConfigError("expected a list", "witnesses")
    ws = tuple(_vector(w, f"witnesses[{i}]") for i, w in enumerate(witnesses))
    with _field_errors("witnesses"):
        scenario = ScenarioSpec(doc.get("name", "custom"), space, sets[0], sets[1], x0, ws)
    solver = dict(DEFAULT_SOLVER)
    solver.update(doc.get("solver", {}))
    with _field_errors("solver"):
        grid = solver.get("oracle_grid")
        cfg = SolverConfig(
            _number(solver, "max_iterations", "solver", int),
            _number(solver, "step_tolerance", "solver"),
            True,
            None if grid is None else _number(solver, "oracle_grid", "solver", int),
        )
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("expected an integer", "seed")
    return ProblemConfig(scenario, cfg, seed)


def _set_doc(s):
    if isinstance(s, GeodesicBall):
        return {"type": "ball", "center": s.center.tolist(), "radius": s.radius}
    if isinstance(s, GeodesicSegment):
        return {"type": "segment", "a": s.a.tolist(), "b": s.b.tolist()}
    return {"type": "hull", "generators": s.generators.tolist()}


def scenario_document(sc: ScenarioSpec, seed: int = 0, solver: Optional[dict] = None) -> dict:
    space = {"kappa": sc.space.kappa, "cap_center": sc.space.cap_center.tolist(), "cap_radius": sc.space.cap_radius}
    if sc.space.c_m is not None:
        space["c_m"] = sc.space.c_m
    return {
        "name": sc.name,
        "space": space,
        "set_a": _set_doc(sc.set_a),
        "set_b": _set_doc(sc.set_b),
        "x0": np.asarray(sc.x0).tolist(),
        "solver": dict(solver or DEFAULT_SOLVER),
        "witnesses": [np.asarray(w).tolist() for w in sc.witnesses],
        "seed": seed,
    }


def load_config(source: str, seed: Optional[int] = None) -> ProblemConfig:
    """Read a JSON config file, or build the built-in scenario named ``source``."""
    if source in BUILTIN and not os.path.exists(source):
        s = 0 if seed is None else seed
        doc = scenario_document(BUILTIN[source](s), s)
    else:
        try:
            with open(source, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}", "config") from exc
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}", "config") from exc
    cfg = parse_config(doc)
    if seed is not None:
        cfg.seed = seed
    return cfg


# -- output -------------------------------------------------------------------------

def _fmt(v):
    return "" if v is None else repr(float(v))


def trace_csv(trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "x", "step_distance", "dist_a", "dist_b", "dist_intersection"])
    for n, x in enumerate(trace.iterates):
        w.writerow([
            n,
            ",".join(repr(float(c)) for c in x),
            _fmt(trace.step_distances[n]) if n < trace.step_distances.size else "",
            _fmt(None if trace.dist_to_a is None else trace.dist_to_a[n]),
            _fmt(None if trace.dist_to_b is None else trace.dist_to_b[n]),
            _fmt(None if trace.dist_to_intersection is None else trace.dist_to_intersection[n]),
        ])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def write_outputs(out_dir: str, files: dict) -> None:
    """Write every file to a temporary name first, then rename them all into place."""
    staged = []
    try:
        os.makedirs(out_dir, exist_ok=True)
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out_dir)
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            staged.append((tmp, os.path.join(out_dir, name)))
    except OSError as exc:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise ConfigError(f"cannot write outputs: {exc.strerror}", "out") from exc
    for tmp, final in staged:
        os.replace(tmp, final)


def _error(exc: Exception) -> int:
    payload = {"error": getattr(exc, "kind", "error"), "message": str(exc)}
    if isinstance(exc, ConfigError) and exc.field:
        payload["field"] = exc.field
    sys.stderr.write(json.dumps(payload) + "\n")
    return EXIT_ERROR


# -- subcommands ----------------------------------------------------------------------

def cmd_solve(config: str, out: str, seed: Optional[int] = None, grid: Optional[int] = None) -> int:
    try:
        pc = load_config(config, seed)
        cfg = pc.solver
        if grid is not None:
            cfg = SolverConfig(cfg.max_iterations, cfg.step_tolerance, True, grid)
        sc = pc.scenario
        trace = alternate(sc.space, sc.set_a, sc.set_b, sc.x0, cfg)
        x = trace.final
        report = {
            "stop_reason": trace.stop_reason.value,
            "iterations": len(trace) - 1,
            "limit_point": x.tolist(),
            "final_dist_a": float(trace.dist_to_a[-1]),
            "final_dist_b": float(trace.dist_to_b[-1]),
            "final_step_distance": float(trace.step_distances[-1]),
        }
        write_outputs(out, {"trace.csv": trace_csv(trace), "report.json": _json_text(report)})
    except CatFeasError as exc:
        return _error(exc)
    return EXIT_OK if trace.stop_reason == StopReason.STEP_TOLERANCE else EXIT_MAX_ITER


def cmd_diagnose(config: str, out: str, seed: Optional[int] = None, grid: Optional[int] = None,
                 epsilons=None) -> int:
    try:
        pc = load_config(config, seed)
        cfg = pc.solver
        if grid is not None or cfg.oracle_grid is None:
            cfg = SolverConfig(cfg.max_iterations, cfg.step_tolerance, True, grid or DEFAULT_SOLVER["oracle_grid"])
        sc = pc.scenario
        if not sc.witnesses:
            raise ConfigError("diagnose needs at least one witness in A ∩ B", "witnesses")
        _, trace, report = diagnose(sc.space, sc.set_a, sc.set_b, sc.x0, sc.witnesses, cfg,
                                    epsilons=tuple(epsilons or (1e-2, 1e-3)), seed=pc.seed)
        write_outputs(out, {"trace.csv": trace_csv(trace), "report.json": _json_text(report.to_dict())})
    except CatFeasError as exc:
        return _error(exc)
    if not report.passed:
        failed = report.failures
        sys.stderr.write(json.dumps({
            "error": "assertion-failed",
            "inequality": failed[0].name,
            "anchor": failed[0].inequality,
            "failed": [c.name for c in failed],
        }) + "\n")
        return EXIT_ASSERTION
    return EXIT_OK


def cmd_estimate_cm(kappa: float, cap_radius: float, samples: int, seed: int, dim: int = 2) -> int:
    try:
        center = np.zeros(dim + 1)
        center[-1] = 1.0
        space = ModelSpace(kappa, dim, center, cap_radius)
        value = estimate_c_m(space, samples, seed)
    except (CatFeasError, ValueError) as exc:
        return _error(exc)
    sys.stdout.write(json.dumps({"c_m": value, "samples": samples, "seed": seed}) + "\n")
    return EXIT_OK


def cmd_scenario(action: str, name: Optional[str], seed: int, out: Optional[str]) -> int:
    if action == "list":
        sys.stdout.write("\n".join(sorted(BUILTIN)) + "\n")
        return EXIT_OK
    if name not in BUILTIN:
        return _error(ConfigError(f"unknown scenario {name!r}", "name"))
    text = _json_text(scenario_document(BUILTIN[name](seed), seed))
    if out is None:
        sys.stdout.write(text)
    else:
        try:
            write_outputs(os.path.dirname(os.path.abspath(out)), {os.path.basename(out): text})
        except CatFeasError as exc:
            return _error(exc)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="catfeas", description="Alternating projections on spherical caps.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, hint in (("solve", "run alternating projections"), ("diagnose", "solve and check every inequality")):
        s = sub.add_parser(name, help=hint)
        s.add_argument("--config", required=True, help="JSON config path or built-in scenario name")
        s.add_argument("--out", required=True, help="output directory for trace.csv and report.json")
        s.add_argument("--seed", type=int, default=None)
        s.add_argument("--grid", type=int, default=None, help="intersection oracle grid")
        if name == "diagnose":
            s.add_argument("--epsilon", type=float, action="append", help="repeatable; default 1e-2 and 1e-3")
    e = sub.add_parser("estimate-cm", help="estimate the convexity constant of a cap")
    e.add_argument("--kappa", type=float, default=1.0)
    e.add_argument("--cap-radius", type=float, required=True)
    e.add_argument("--samples", type=int, default=10_000)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--dim", type=int, default=2)
    sc = sub.add_parser("scenario", help="list or emit built-in scenarios as config files")
    sc.add_argument("action", choices=["list", "emit"])
    sc.add_argument("name", nargs="?")
    sc.add_argument("--seed", type=int, default=0)
    sc.add_argument("--out", default=None)
    return p


def main(argv=None) -> int:
    level = os.environ.get("CAT_FEAS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "solve":
        return cmd_solve(args.config, args.out, args.seed, args.grid)
    if args.command == "diagnose":
        return cmd_diagnose(args.config, args.out, args.seed, args.grid, args.epsilon)
    if args.command == "estimate-cm":
        return cmd_estimate_cm(args.kappa, args.cap_radius, args.samples, args.seed, args.dim)
    return cmd_scenario(args.action, args.name, args.seed, args.out)


if __name__ == "__main__":
    sys.exit(main())
