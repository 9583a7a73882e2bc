"""Command-line interface.

Every subcommand reads an optional TOML (or JSON) config, applies flag
overrides (flags win), runs, and writes CSV series plus a JSON run report to
``--out``.  Exit codes: 0 success, 1 configuration error, 2 solver failure.
Errors are also written to stderr as a JSON object.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass
from importlib import metadata
from pathlib import Path

import numpy as np
import tomli

from .corpus import check_builtin, check_prop51, list_builtins
from .grid import Grid, interval_grid, radial_grid
from .ground_state import GroundStateError, energy_basket, minimize_energy
from .continuation import (
    PreconditionError,
    continue_curve,
    rescaled_gap,
    singular_continue,
)
from .solver import (
    BoundsViolation,
    NoGlobalSubsolution,
    SolveConfig,
    SolverError,
    component_subsolution,
    make_subsolution,
    monotone_iterate,
    newton_solve,
    supersolution,
)
from .spectrum import EigenError, principal_eigenpair, t_star, transversality
from .weight import Weight, WeightError, parse_weight_spec, sample_weight, solution_operator

__all__ = ["main", "run", "ConfigError", "RunConfig", "load_config"]


class ConfigError(ValueError):
    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.1.0"


# configuration -----------------------------------------------------------------


@dataclass
class RunConfig:
    weight: dict
    grid: dict
    solver: dict
    sections: dict

    def echo(self) -> dict:
        return {"weight": self.weight, "grid": self.grid, "solver": self.solver, **self.sections}


_SECTIONS = ("solve", "eig", "groundstate", "curve", "singular")


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", "config") from None
    try:
        if p.suffix == ".json":
            return json.loads(text)
        return tomli.loads(text)
    except (ValueError, tomli.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config: {exc}", "config") from None


def build_config(raw: dict, args) -> RunConfig:
    raw = dict(raw)
    weight = raw.pop("weight", None)
    if getattr(args, "weight", None):
        try:
            weight = json.loads(args.weight)
        except ValueError as exc:
            raise ConfigError(f"--weight is not valid JSON: {exc}", "weight") from None
    if weight is None:
        raise ConfigError("missing required field 'weight'", "weight")
    if isinstance(weight, (int, float)):
        weight = {"constant": float(weight)}
    grid = dict(raw.pop("grid", {}))
    if args.n is not None:
        grid["n_interior"] = args.n
    solver = dict(raw.pop("solver", {}))
    sections = {k: dict(raw.pop(k, {})) for k in _SECTIONS}
    lam = raw.pop("lambda1_target", None)
    if lam is not None:
        sections["lambda1_target"] = lam
    if raw:
        raise ConfigError(f"unknown config keys: {sorted(raw)}", sorted(raw)[0])
    return RunConfig(weight, grid, solver, sections)


def _solve_config(cfg: RunConfig) -> SolveConfig:
    try:
        return SolveConfig(**cfg.solver)
    except TypeError as exc:
        raise ConfigError(f"bad solver section: {exc}", "solver") from None
    except ValueError as exc:
        raise ConfigError(str(exc), "solver") from None


def _make_grid(cfg: RunConfig, domain) -> Grid:
    g = cfg.grid
    kind = g.get("kind", "interval")
    n = int(g.get("n_interior", 1000))
    try:
        if kind == "interval":
            lo, hi = domain if domain is not None else (0.0, 1.0)
            return interval_grid(g.get("x0", lo), g.get("x1", hi), n)
        if kind == "radial":
            return radial_grid(g.get("R", 1.0), int(g.get("dim", 1)), n)
    except ValueError as exc:
        raise ConfigError(str(exc), "grid") from None
    raise ConfigError(f"unknown grid kind {kind!r}", "grid.kind")


def _make_weight(cfg: RunConfig) -> Weight:
    try:
        spec = parse_weight_spec(cfg.weight)
        g = _make_grid(cfg, spec.domain)
        w = sample_weight(spec, g)
        lam = cfg.sections.get("lambda1_target")
        if lam is not None:
            lam1 = principal_eigenpair(w).lambda1
            w = sample_weight(spec.scaled(lam1 / float(lam)), g)
    except (WeightError, TypeError) as exc:
        raise ConfigError(f"bad weight: {exc}", "weight") from None
    return w


# output helpers ------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for r in rows:
            wr.writerow([_fmt(v) for v in r])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    return obj


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


class _Tally:
    """Counts of a-priori bound checks seen in solve reports."""

    def __init__(self):
        self.counts = {"upper_pass": 0, "upper_fail": 0, "lower_pass": 0, "lower_fail": 0}

    def add(self, bounds: dict):
        for k in ("upper", "lower"):
            if k in bounds:
                self.counts[f"{k}_{'pass' if bounds[k] else 'fail'}"] += 1


def _solution_rows(w: Weight, u):
    return zip(w.grid.nodes, np.asarray(u), w.values)


# subcommands ------------------------------------------------------------------------


def _init_guess(w: Weight, q: float, mode: str, path: str | None, scfg: SolveConfig):
    if mode == "sub":
        try:
            return make_subsolution(w, q, scfg.tol_slack).values
        except NoGlobalSubsolution:
            k = len(w.components)
            if k == 0:
                raise ConfigError("weight has no positive part", "weight")
            return np.max([component_subsolution(w, q, i).values for i in range(k)], axis=0)
    if mode == "zero":
        # the q -> 0 end of the branch, u(0) = S(a), clipped to the cone
        v = np.maximum(solution_operator(w).field.values, 0.0)
        if not np.any(v):
            raise ConfigError("S(a) has no positive part; choose another init", "init")
        return v
    if mode == "file":
        if not path:
            raise ConfigError("--init file needs --init-file PATH", "init-file")
        try:
            data = np.genfromtxt(path, delimiter=",", names=True)
            x, u = np.asarray(data["x"]), np.asarray(data["u"])
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read init file: {exc}", "init-file") from None
        return np.maximum(np.interp(w.grid.nodes, x, u), 0.0)
    raise ConfigError(f"unknown init mode {mode!r}", "init")


def cmd_solve(args, cfg: RunConfig, out: Path, report: dict, tally: _Tally) -> int:
    sec = cfg.sections["solve"]
    q = args.q if args.q is not None else sec.get("q")
    if q is None:
        raise ConfigError("missing q (flag --q or [solve] q)", "q")
    q = float(q)
    method = args.method or sec.get("method", "newton")
    init = args.init or sec.get("init", "sub")
    w = _make_weight(cfg)
    scfg = _solve_config(cfg)
    cfg.sections["solve"].update({"q": q, "method": method, "init": init})
    if method == "newton":
        u0 = _init_guess(w, q, init, args.init_file, scfg)
        rep = newton_solve(w, q, u0, scfg)
    elif method == "monotone":
        try:
            lo = make_subsolution(w, q, scfg.tol_slack)
        except NoGlobalSubsolution:
            lo = _init_guess(w, q, "sub", None, scfg)
        rep = monotone_iterate(w, q, lo, supersolution(w, q), scfg)
    else:
        raise ConfigError(f"unknown method {method!r}", "method")
    tally.add(rep.bounds_checked)
    write_csv(out / "solution.csv", ["x", "u", "a"], _solution_rows(w, rep.solution.values))
    report["outputs"]["solve"] = {
        **rep.to_dict(),
        "q": q,
        "grid": w.grid.describe(),
        "fields": {"x": w.grid.nodes, "u": rep.solution.values},
    }
    return 0 if rep.converged else 2


def cmd_eig(args, cfg: RunConfig, out: Path, report: dict, tally: _Tally) -> int:
    w = _make_weight(cfg)
    k = args.subdomain if args.subdomain is not None else cfg.sections["eig"].get("subdomain")
    sub = None
    if k is not None:
        if not 0 <= int(k) < len(w.components):
            raise ConfigError(
                f"subdomain {k} out of range ({len(w.components)} components)", "subdomain"
            )
        sub = w.components[int(k)]
    pair = principal_eigenpair(w, sub)
    res = {
        "lambda1": pair.lambda1,
        "residual": pair.residual,
        "transversality": transversality(w, pair),
        "subdomain": list(pair.subdomain),
        "iterations": pair.iterations,
    }
    try:
        res["t_star"] = t_star(w, pair)
    except EigenError as exc:
        res["t_star"] = None
        res["t_star_error"] = str(exc)
    report["outputs"]["eig"] = res
    print(json.dumps(_jsonable(res), sort_keys=True))
    return 0


def cmd_groundstate(args, cfg: RunConfig, out: Path, report: dict, tally: _Tally) -> int:
    sec = cfg.sections["groundstate"]
    q = args.q if args.q is not None else sec.get("q")
    if q is None:
        raise ConfigError("missing q (flag --q or [groundstate] q)", "q")
    q = float(q)
    starts = int(args.starts if args.starts is not None else sec.get("starts", 5))
    seed = int(args.seed if args.seed is not None else sec.get("seed", 0))
    sec.update({"q": q, "starts": starts, "seed": seed})
    w = _make_weight(cfg)
    gs = minimize_energy(w, q, _solve_config(cfg), n_starts=starts, seed=seed)
    if gs.report is not None:
        tally.add(gs.report.bounds_checked)
    write_csv(out / "groundstate.csv", ["x", "u", "a"], _solution_rows(w, gs.u.values))
    report["outputs"]["groundstate"] = {
        **gs.to_dict(),
        "basket": energy_basket(w, q),
        "grid": w.grid.describe(),
        "fields": {"x": w.grid.nodes, "u": gs.u.values},
    }
    return 0


def _q_grid(qmin: float, qmax: float, steps: int, geometric: bool) -> np.ndarray:
    if not (0 < qmin < qmax < 1) or steps < 2:
        raise ConfigError("curve needs 0 < qmin < qmax < 1 and steps >= 2", "curve")
    if geometric:
        # geometric spacing in 1 - q resolves the approach to q = 1
        return 1.0 - np.geomspace(1.0 - qmin, 1.0 - qmax, steps)
    return np.linspace(qmin, qmax, steps)


def cmd_curve(args, cfg: RunConfig, out: Path, report: dict, tally: _Tally) -> int:
    sec = cfg.sections["curve"]
    qmin = float(args.qmin if args.qmin is not None else sec.get("qmin", 0.01))
    qmax = float(args.qmax if args.qmax is not None else sec.get("qmax", 0.99))
    steps = int(args.steps if args.steps is not None else sec.get("steps", 50))
    geo = bool(args.geometric_tail or sec.get("geometric_tail", False))
    sec.update({"qmin": qmin, "qmax": qmax, "steps": steps, "geometric_tail": geo})
    qs = _q_grid(qmin, qmax, steps, geo)
    w = _make_weight(cfg)
    curve = continue_curve(w, qs, _solve_config(cfg))
    sa = solution_operator(w).field.values
    try:
        pair = principal_eigenpair(w)
        profile = t_star(w, pair) * pair.phi1.values
    except EigenError:
        pair = profile = None
    rows = []
    for s in curve.samples:
        g = rescaled_gap(pair.lambda1, s.param, s.u, profile) if pair is not None else math.nan
        rows.append(
            (s.param, s.sup_norm, s.residual, s.classification, g, float(np.max(np.abs(s.u.values - sa))))
        )
    header = ["q", "sup_norm", "residual", "classification", "g_rescaled", "gap_q0"]
    write_csv(out / "curve.csv", header, rows)
    if args.save_solutions:
        for i, s in enumerate(curve.samples):
            write_csv(out / f"solution_{i:04d}.csv", ["x", "u", "a"], _solution_rows(w, s.u.values))
    report["outputs"]["curve"] = {**curve.to_dict(), "grid": w.grid.describe(), "rows": rows}
    return 2 if curve.truncated else 0


def cmd_singular(args, cfg: RunConfig, out: Path, report: dict, tally: _Tally) -> int:
    sec = cfg.sections["singular"]
    gmax = float(args.gmax if args.gmax is not None else sec.get("gmax", 0.05))
    steps = int(args.steps if args.steps is not None else sec.get("steps", 6))
    if not gmax > 0 or steps < 2:
        raise ConfigError("singular needs gmax > 0 and steps >= 2", "singular")
    sec.update({"gmax": gmax, "steps": steps})
    w = _make_weight(cfg)
    curve = singular_continue(w, np.linspace(0.0, gmax, steps), _solve_config(cfg))
    sa = solution_operator(w).field.values
    rows = [
        (s.param, s.sup_norm, s.residual, s.classification, float(np.max(np.abs(s.u.values - sa))))
        for s in curve.samples
    ]
    write_csv(out / "singular.csv", ["gamma", "sup_norm", "residual", "classification", "gap_s"], rows)
    report["outputs"]["singular"] = {**curve.to_dict(), "grid": w.grid.describe(), "rows": rows}
    return 0


def cmd_corpus(args, cfg, out: Path, report: dict, tally: _Tally) -> int:
    if args.action == "list":
        items = list_builtins()
        report["outputs"]["corpus"] = items
        print(json.dumps(_jsonable(items), indent=2))
        return 0
    if not args.id:
        raise ConfigError("corpus check needs --id", "id")
    try:
        params = json.loads(args.params) if args.params else {}
    except ValueError as exc:
        raise ConfigError(f"--params is not valid JSON: {exc}", "params") from None
    n = args.n
    try:
        if args.id == "prop51":
            q = args.q if args.q is not None else params.get("q", 1.0 / 3.0)
            results = check_prop51(float(q), **({"n": n} if n else {}))
        else:
            if args.q is not None:
                params["q"] = args.q
            results = check_builtin(args.id, params, **({"n": n} if n else {}))
    except (WeightError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "id") from None
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}  value={r.value:.3e}  threshold={r.threshold:.3e}")
    report["outputs"]["corpus"] = [r.to_dict() for r in results]
    return 0


def cmd_report(args, cfg, out: Path, report: dict, tally: _Tally) -> int:
    src = Path(args.source)
    try:
        stored = json.loads(src.read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read stored report: {exc}", "source") from None
    outputs = stored.get("outputs", {})
    written = []
    if "curve" in outputs:
        rows = outputs["curve"]["rows"]
        write_csv(out / "figure_curve.csv", ["q", "sup_norm", "g_rescaled", "classification"],
                  [(r[0], r[1], r[4], r[3]) for r in rows])
        written.append("figure_curve.csv")
        lim = outputs["curve"].get("limit_q1") or {}
        report["outputs"]["regime"] = lim.get("regime")
    if "singular" in outputs:
        rows = outputs["singular"]["rows"]
        write_csv(out / "figure_singular.csv", ["gamma", "sup_norm", "gap_s"],
                  [(r[0], r[1], r[4]) for r in rows])
        written.append("figure_singular.csv")
    overlay = {k: outputs[k]["fields"] for k in ("solve", "groundstate") if k in outputs}
    if overlay:
        names = sorted(overlay)
        x = overlay[names[0]]["x"]
        cols = [overlay[k]["u"] for k in names]
        write_csv(out / "figure_solutions.csv", ["x", *names], zip(x, *cols))
        written.append("figure_solutions.csv")
    if not written:
        raise ConfigError("stored report has no curve or solution data", "source")
    report["outputs"]["written"] = written
    return 0


_COMMANDS = {
    "solve": cmd_solve,
    "eig": cmd_eig,
    "groundstate": cmd_groundstate,
    "curve": cmd_curve,
    "singular": cmd_singular,
    "corpus": cmd_corpus,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML (or .json) config file")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, help="random seed (ground-state starts)")
    common.add_argument("--n", type=int, help="number of interior nodes")
    common.add_argument("--weight", help="weight descriptor as JSON (overrides the config)")

    p = argparse.ArgumentParser(prog="sublinear", description=__doc__.splitlines()[0])
    sp = p.add_subparsers(dest="command", required=True)

    s = sp.add_parser("solve", parents=[common], help="solve at fixed q")
    s.add_argument("--q", type=float)
    s.add_argument("--init", choices=["zero", "sub", "file"])
    s.add_argument("--init-file")
    s.add_argument("--method", choices=["newton", "monotone"])

    s = sp.add_parser("eig", parents=[common], help="principal eigenpair and t*")
    s.add_argument("--subdomain", type=int)

    s = sp.add_parser("groundstate", parents=[common], help="energy minimiser")
    s.add_argument("--q", type=float)
    s.add_argument("--starts", type=int)

    s = sp.add_parser("curve", parents=[common], help="continuation in q")
    s.add_argument("--qmin", type=float)
    s.add_argument("--qmax", type=float)
    s.add_argument("--steps", type=int)
    s.add_argument("--geometric-tail", action="store_true")
    s.add_argument("--save-solutions", action="store_true")

    s = sp.add_parser("singular", parents=[common], help="continuation in the singular exponent")
    s.add_argument("--gmax", type=float)
    s.add_argument("--steps", type=int)

    s = sp.add_parser("corpus", parents=[common], help="list builtins or run invariant checks")
    s.add_argument("action", choices=["list", "check"])
    s.add_argument("--id")
    s.add_argument("--q", type=float)
    s.add_argument("--params", help="builtin parameters as JSON")

    s = sp.add_parser("report", parents=[common], help="re-render a stored run report as CSVs")
    s.add_argument("--from", dest="source", required=True, help="path to report.json")
    return p


def _error(kind: str, message: str, field: str | None = None) -> None:
    err = {"type": kind, "message": message}
    if field is not None:
        err["field"] = field
    sys.stderr.write(json.dumps({"error": err}) + "\n")


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 1
        if code != 0:
            _error("config", "invalid command line")
            return 1
        return 0
    out = Path(args.out)
    report = {
        "artifact": "artifact",
        "version": _version(),
        "command": args.command,
        "outputs": {},
    }
    tally = _Tally()
    t0 = time.perf_counter()
    try:
        out.mkdir(parents=True, exist_ok=True)
        if args.command in ("corpus", "report"):
            cfg = None
        else:
            cfg = build_config(load_config(args.config), args)
            report["config"] = cfg.echo()
        code = _COMMANDS[args.command](args, cfg, out, report, tally)
    except ConfigError as exc:
        _error("config", str(exc), exc.field)
        return 1
    except (SolverError, BoundsViolation, EigenError, GroundStateError, PreconditionError) as exc:
        _error("solver", str(exc))
        code = 2
        report["error"] = str(exc)
    report["assertions"] = tally.counts
    report["timings"] = {"total_seconds": time.perf_counter() - t0}
    if args.command != "report" or code == 0:
        write_json(out / ("report.json" if args.command != "report" else "report_rendered.json"), report)
    return code


def main() -> None:
    sys.exit(run())
