"""Command-line frontend: ``lienls {describe,check,reduce,solve,verify,sweep}``.

Exit codes: 0 pass, 1 suite or module failure, 2 configuration error.
Every artifact written under ``--out`` carries the config hash, seed and
toolkit version.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from itertools import product
from pathlib import Path

import numpy as np
import sympy as sp
import yaml

from . import __version__
from . import expr as X
from .algebra import index
from .catalog import CatalogEntry, load, solution_family, solution_residuals, verify_entry
from .errors import ConfigError, LieNLSError, UnboundSymbolError, UnsupportedGroupError
from .group import haar_density
from .io import RunConfig, config_hash, load_config, parse_expr
from .solver import Grid1D, ode_integrate, split_step_evolve
from .suites import SUITES, run_suites

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

# tolerance for residuals of exact solutions, before --tolerance-scale
SOLUTION_TOL = 1e-7


class Run:
    """Resolved settings shared by all verbs."""

    def __init__(self, args, config: RunConfig | None):
        self.args = args
        self.config = config
        group = getattr(args, "group", None) or (config.group if config else None)
        if not group:
            raise ConfigError("no group given (positional argument or 'group' in --config)")
        if config and config.source and not Path(group).is_absolute() and group.endswith((".yaml", ".yml")):
            cand = Path(config.source).parent / group
            group = str(cand) if cand.exists() else group
        self.group = group
        self.seed = args.seed if args.seed is not None else (config.seed if config else 0)
        self.out = Path(args.out) if args.out else (Path(config.output) if config and config.output else None)
        self.scale = args.tolerance_scale
        self.entry: CatalogEntry = load(group)
        raw = config.raw if config else {"group": group}
        self.hash = config_hash({"config": raw, "command": args.command, "options": _option_record(args)})

    def setting(self, name: str, block: str, default=None):
        """Command-line option, else config block entry, else default."""
        v = getattr(self.args, name, None)
        if v is not None:
            return v
        if self.config:
            blk = getattr(self.config, block, {}) or {}
            if name in blk:
                return blk[name]
            if name in ("metric", "orbit", "equation"):
                return getattr(self.config, name)
        return default

    def binding(self) -> dict:
        b = dict(self.config.numeric_parameters()) if self.config else {}
        for item in getattr(self.args, "param", None) or []:
            k, _, v = item.partition("=")
            if not _ or not k:
                raise ConfigError(f"--param expects name=value, got '{item}'")
            b[k.strip()] = _number(v, f"--param {k}")
        return b

    def stamp(self) -> dict:
        return {"config_hash": self.hash, "seed": self.seed, "version": __version__}

    # -- artifacts ---------------------------------------------------------
    def write_csv(self, name: str, header: list, rows) -> Path | None:
        if self.out is None:
            return None
        buf = io.StringIO()
        buf.write(f"# config_hash={self.hash} seed={self.seed} version={__version__}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])
        return _atomic_write(self.out / name, buf.getvalue())

    def write_manifest(self, command: str, results: dict, files: list) -> Path | None:
        if self.out is None:
            return None
        doc = {
            "command": command,
            "group": self.entry.name,
            **self.stamp(),
            "tolerance_scale": self.scale,
            "config": self.config.source if self.config else None,
            "files": sorted(str(Path(f).name) for f in files if f),
            "results": results,
        }
        return _atomic_write(self.out / f"{command}-manifest.yaml", yaml.safe_dump(_plain(doc), sort_keys=True))


def _option_record(args) -> dict:
    skip = {"func", "config", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _number(v: str, where: str) -> float:
    try:
        return float(v)
    except ValueError:
        e = parse_expr(v, None, where)
        try:
            return float(e)
        except TypeError as exc:
            raise ConfigError(f"{where}: '{v}' is not numeric") from exc


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, sp.Basic):
        return str(obj)
    return obj


def _atomic_write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)
    return path


def _append_record(path: Path, record: dict) -> None:
    """One JSON line per record, written with a single O_APPEND write."""
    path.parent.mkdir(parents=True, exist_ok=True)
    line = (json.dumps(_plain(record), sort_keys=True) + "\n").encode()
    fd = os.open(path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
    try:
        os.write(fd, line)
        os.fsync(fd)
    finally:
        os.close(fd)


def _emit(doc: dict) -> None:
    sys.stdout.write(yaml.safe_dump(_plain(doc), sort_keys=False, width=120))


# ---------------------------------------------------------------------------
# verbs


def cmd_describe(run: Run) -> int:
    e = run.entry
    metric = run.setting("metric", "reduction", "default")
    geo = e.geometry(metric)
    chart = e.chart

    def frame(F):
        return [" + ".join(f"({F.matrix[a, m]}) d_{chart.names[m]}" for m in range(chart.dim) if F.matrix[a, m] != 0)
                for a in range(chart.dim)]

    doc = {
        "group": e.name,
        "title": e.title,
        "dimension": e.algebra.dim,
        "index": index(e.algebra, seed=run.seed),
        "brackets": [f"[e{b + 1}, e{c + 1}] = {coef} e{a + 1}" for b, c, a, coef in e.algebra.nonzero_brackets()],
        "casimirs": [str(K) for K in e.algebra.casimirs],
        "coordinates": [{"name": c.name, "generator": c.generator + 1, "periodic": c.periodic} for c in chart.coords],
        "left_frame": frame(e.xi),
        "right_frame": frame(e.eta),
        "haar_density": str(haar_density(chart, seed=run.seed)),
        "metric": metric,
        "scalar_curvature": str(sp.factor(geo.scalar_curvature)),
        "ricci_nonzero": {f"{chart.names[i]},{chart.names[j]}": str(sp.simplify(geo.ricci[i, j]))
                          for i in range(chart.dim) for j in range(i, chart.dim) if geo.ricci[i, j] != 0},
    }
    if e.orbits:
        doc["orbits"] = {n: {"dim_O": e.orbit(n).dim, "dim_Q": e.orbit(n).reduced_dim} for n in e.orbits}
    _emit(doc)
    run.write_manifest("describe", doc, [])
    return EXIT_OK


def cmd_check(run: Run) -> int:
    only = run.args.suite or None
    results = run_suites(run.entry, seed=run.seed, tolerance_scale=run.scale,
                         corrupt_phase=run.args.corrupt_phase, only=only)
    for r in results:
        res = "-" if r.residual is None else f"{r.residual:.3e}"
        print(f"{r.suite:14s} {r.status.upper():5s} residual={res} tol={r.tolerance:.1e}  {r.detail}")
        if r.witness:
            print(f"{'':14s} witness: {json.dumps(_plain(r.witness), sort_keys=True)}")
    ok = all(r.passed for r in results)
    print("check:", "PASS" if ok else "FAIL")
    f = run.write_csv("check.csv", ["suite", "status", "residual", "tolerance", "detail", "witness"],
                      [[r.suite, r.status, r.residual, r.tolerance, r.detail,
                        json.dumps(_plain(r.witness), sort_keys=True) if r.witness else ""] for r in results])
    run.write_manifest("check", {"passed": ok, "suites": {r.suite: r.status for r in results}}, [f])
    return EXIT_OK if ok else EXIT_FAIL


def _reduced(run: Run, equation=None, metric=None):
    e = run.entry
    eq = equation or run.setting("equation", "reduction", "default")
    met = metric or run.setting("metric", "reduction", "default")
    orb = run.setting("orbit", "reduction", "default")
    for kind, name, known in (("equation", eq, e.equations), ("metric", met, e.metrics), ("orbit", orb, e.orbits)):
        if name not in known:
            raise ConfigError(f"unknown {kind} preset '{name}' for {e.name} (known: {', '.join(known)})")
    return e.reduced(eq, met, orb), (eq, met, orb)


def _exact(v):
    v = float(v)
    return sp.Integer(int(v)) if v.is_integer() else sp.Float(v)


def _substituted(red, binding: dict) -> dict:
    sub = {X.sym(k): _exact(v) for k, v in binding.items()}
    return {k: sp.simplify(v.subs(sub)) for k, v in red.coefficients().items()}


def cmd_reduce(run: Run) -> int:
    red, (eq, met, orb) = _reduced(run)
    coeffs = _substituted(red, run.binding())
    doc = {
        "group": run.entry.name,
        "equation": eq,
        "metric": met,
        "orbit": orb,
        "kind": red.kind,
        "variable": red.var.name,
        "kappa2": str(red.kappa2),
        "coefficients": {k: str(v) for k, v in coeffs.items()},
        **run.stamp(),
    }
    _emit(doc)
    f = run.write_csv("reduced.csv", ["coefficient", "expression"], [[k, str(v)] for k, v in coeffs.items()])
    run.write_manifest("reduce", doc, [f])
    return EXIT_OK


def _solve(run: Run, binding: dict, solution: str | None):
    """Numerical solution checked against a registered exact family.

    Returns (rows, summary) with rows (t, x, |psi|^2, Re, Im, |psi - exact|).
    """
    e = run.entry
    name = solution or run.setting("solution", "solver") or (next(iter(e.solutions)) if e.solutions else None)
    if name is None:
        raise ConfigError(f"{e.name} has no registered solution family to initialize the solver")
    if name not in e.solutions:
        raise ConfigError(f"unknown solution '{name}' (known: {', '.join(e.solutions)})")
    spec = e.solutions[name]
    fam = solution_family(e, name)
    red = e.reduced(spec["equation"], spec["metric"])
    sub = {X.sym(k): v for k, v in binding.items()}
    red_n = red.subs(sub)
    if red.kind == "time":
        hw = float(run.setting("half_width", "solver", 10.0))
        n = int(run.setting("n", "solver", 1024))
        dt = float(run.setting("dt", "solver", 1e-3))
        t_end = float(run.setting("t_end", "solver", 1.0))
        steps = int(round(t_end / dt))
        save = int(run.setting("save_every", "solver", steps))
        grid = Grid1D.box(hw, n)
        psi0 = fam(grid.x, binding, 0.0)
        sol = split_step_evolve(red_n, psi0, grid, dt, steps, binding, save_every=save)
        rows = []
        err = 0.0
        for t, psi in zip(sol.t, sol.psi):
            ex = fam(grid.x, binding, float(t))
            d = np.abs(psi - ex)
            err = max(err, float(np.max(d)))
            rows += [[float(t), float(x), float(abs(p) ** 2), float(p.real), float(p.imag), float(r)]
                     for x, p, r in zip(grid.x, psi, d)]
        summary = {"solution": name, "method": "split-step", "dt": dt, "steps": steps, "n": n,
                   "max_error": err, "norm_drift": sol.norm_drift()}
        return rows, summary
    span = run.setting("span", "solver", [0.1, 10.0])
    span = (float(span[0]), float(span[1]))
    n_out = int(run.setting("n", "solver", 400))
    psi0 = complex(np.asarray(fam(np.array([span[0]]), binding)).ravel()[0])
    sol = ode_integrate(red_n, psi0, span, binding, n_out=n_out)
    ex = fam(sol.x, binding)
    d = np.abs(sol.psi[0] - ex)
    rows = [[0.0, float(x), float(abs(p) ** 2), float(p.real), float(p.imag), float(r)]
            for x, p, r in zip(sol.x, sol.psi[0], d)]
    return rows, {"solution": name, "method": "rk45", "span": list(span), "max_error": float(np.max(d))}


def cmd_solve(run: Run) -> int:
    rows, summary = _solve(run, run.binding(), run.args.solution)
    summary.update(run.stamp())
    _emit(summary)
    f = run.write_csv("solution.csv", ["t", "coordinate", "abs2", "re", "im", "residual"], rows)
    run.write_manifest("solve", summary, [f])
    return EXIT_OK


def cmd_verify(run: Run) -> int:
    e = run.entry
    report = verify_entry(e, seed=run.seed)
    print(report)
    tol = SOLUTION_TOL * run.scale
    sol_rows = []
    for name in e.solutions:
        r = solution_residuals(e, name, points=run.args.points, seed=run.seed)
        status = "pass" if max(r.values()) <= tol else "fail"
        sol_rows.append([name, r["reduced"], r["lifted"], tol, status])
        print(f"solution {name:16s} reduced={r['reduced']:.3e} lifted={r['lifted']:.3e} tol={tol:.0e} {status.upper()}")
    unexpected = report.unexpected
    ok = not unexpected and all(r[-1] == "pass" for r in sol_rows)
    print("verify:", "PASS" if ok else "FAIL")
    f1 = run.write_csv("registry.csv", ["key", "kind", "status", "annotated", "residual", "where", "detail"],
                       [[l.key, l.kind, l.status, l.suspected, l.residual, l.where, l.detail] for l in report.lines])
    f2 = run.write_csv("solutions.csv", ["solution", "reduced_residual", "lifted_residual", "tolerance", "status"], sol_rows)
    run.write_manifest("verify", {"passed": ok, "registry": {l.key: l.status for l in report.lines},
                                  "unexpected_discrepancies": [l.key for l in unexpected],
                                  "solutions": {r[0]: r[-1] for r in sol_rows}}, [f1, f2])
    return EXIT_OK if ok else EXIT_FAIL


def _grid(run: Run) -> dict:
    g = {}
    if run.config and run.config.sweep.get("grid"):
        for k, v in run.config.sweep["grid"].items():
            vals = v if isinstance(v, list) else [v]
            g[str(k)] = [_number(str(x), f"sweep.grid.{k}") for x in vals]
    for item in run.args.grid or []:
        k, _, v = item.partition("=")
        if not _:
            raise ConfigError(f"--grid expects name=v1,v2,..., got '{item}'")
        g[k.strip()] = [_number(x, f"--grid {k}") for x in v.split(",") if x.strip()]
    if not g:
        raise ConfigError("sweep needs a grid (sweep.grid in --config or --grid name=v1,v2)")
    return g


def cmd_sweep(run: Run) -> int:
    grid = _grid(run)
    what = run.setting("task", "sweep", "reduce")
    if what not in ("reduce", "solve"):
        raise ConfigError(f"sweep task must be 'reduce' or 'solve', got '{what}'")
    workers = int(run.setting("workers", "sweep", 4))
    base = run.binding()
    keys = list(grid)
    points = [dict(zip(keys, vals)) for vals in product(*(grid[k] for k in keys))]
    if what == "reduce":
        red, _ = _reduced(run)  # derive once; workers only substitute
    else:
        spec_name = run.args.solution or run.setting("solution", "solver") or next(iter(run.entry.solutions), None)
        if spec_name is None or spec_name not in run.entry.solutions:
            raise ConfigError("sweep task 'solve' needs a registered solution family")
        sp_ = run.entry.solutions[spec_name]
        run.entry.reduced(sp_["equation"], sp_["metric"])
        solution_family(run.entry, spec_name)

    def task(i_params):
        i, params = i_params
        b = {**base, **params}
        if what == "reduce":
            result = {k: str(v) for k, v in _substituted(red, b).items()}
        else:
            _, result = _solve(run, b, run.args.solution)
        return {"index": i, "params": params, "task": what, "group": run.entry.name, **run.stamp(), "result": result}

    records_path = run.out / "records.jsonl" if run.out else None
    n = 0
    with ThreadPoolExecutor(max_workers=max(1, workers)) as ex:
        for rec in ex.map(task, enumerate(points)):
            n += 1
            if records_path:
                _append_record(records_path, rec)
            else:
                print(json.dumps(_plain(rec), sort_keys=True))
    print(f"sweep: {n} records" + (f" appended to {records_path}" if records_path else ""))
    run.write_manifest("sweep", {"records": n, "task": what, "grid": grid}, [records_path])
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--config", default=d(None), help="run-configuration file")
    p.add_argument("--seed", type=int, default=d(None), help="seed for all randomized identity tests")
    p.add_argument("--out", default=d(None), help="output directory for CSV tables and manifests")
    p.add_argument("--tolerance-scale", type=float, default=d(1.0), help="multiply every tolerance by this factor")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lienls", description="Noncommutative reduction of nonlinear Schrodinger equations on Lie groups.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)

    def verb(name, help_, func):
        s = sub.add_parser(name, help=help_)
        _global_flags(s, suppress=True)
        s.add_argument("group", nargs="?", help="catalog name (e2, exp-solv-4) or group-definition file")
        s.set_defaults(func=func)
        return s

    s = verb("describe", "summarize a group: index, Casimirs, frames, curvature", cmd_describe)
    s.add_argument("--metric")

    s = verb("check", "run the invariant suites", cmd_check)
    s.add_argument("--suite", action="append", choices=SUITES, help="run only this suite (repeatable)")
    s.add_argument("--corrupt-phase", action="store_true", help="negative control: perturb the kernel phase")

    for name, help_, func in (("reduce", "derive the reduced equation", cmd_reduce),
                              ("solve", "solve the reduced equation numerically", cmd_solve),
                              ("sweep", "iterate parameters over a grid", cmd_sweep)):
        s = verb(name, help_, func)
        s.add_argument("--equation")
        s.add_argument("--metric")
        s.add_argument("--orbit")
        s.add_argument("--param", action="append", metavar="NAME=VALUE", help="parameter value (repeatable)")
        if name in ("solve", "sweep"):
            s.add_argument("--solution", help="registered solution family")
            s.add_argument("--dt", type=float)
            s.add_argument("--n", type=int)
            s.add_argument("--t-end", dest="t_end", type=float)
            s.add_argument("--half-width", dest="half_width", type=float)
        if name == "sweep":
            s.add_argument("--grid", action="append", metavar="NAME=V1,V2,...")
            s.add_argument("--task", choices=("reduce", "solve"))
            s.add_argument("--workers", type=int)

    s = verb("verify", "check printed formulas and exact solutions", cmd_verify)
    s.add_argument("--points", type=int, default=1000, help="sample points per exact-solution residual")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config) if args.config else None
        run = Run(args, config)
    except (ConfigError, UnsupportedGroupError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(run)
    except (ConfigError, UnboundSymbolError, UnsupportedGroupError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LieNLSError as exc:
        block = {"reduce": "reduction", "solve": "solver", "sweep": "sweep"}.get(args.command, args.command)
        print(f"error [{block}]: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
