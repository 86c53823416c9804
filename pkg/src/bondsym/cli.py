"""Command-line entry point: ``bondsym <command> [options]``.

Every option can also come from a sectioned key=value file given by
``--config``; flags override the file.  Exit codes: 0 when every executed
check passed, 1 on a numeric or domain failure, 2 on a usage error.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import os
import sys
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import expr as ex
from .fdsolver import SolverConfig, make_grid, solve_barrier, solve_terminal
from .grid import Grid, Surface, uniform_grid
from .model import PARAM_NAMES, Params, PdeProblem
from .solutions import BARRIER_IDS, CASE_IDS, BarrierSpec, Generator, constraint_summary, get_case
from .suites import SUITES, run_suite
from .transforms import reduction_chain
from .verify import ResidualReport, flow_map, solution_to_solution_check

__all__ = ["main", "run", "build_parser", "UsageError", "OPTION_KEYS"]

COMMANDS = ("verify", "oracle", "price", "transform", "flow", "cases")


class UsageError(ValueError):
    """Bad flags or config contents; maps to exit code 2."""


# option dest -> (config section, key)
OPTION_KEYS = {
    "case": ("run", "case"),
    "suite": ("run", "suite"),
    "seed": ("run", "seed"),
    "tol": ("run", "tol"),
    "out": ("run", "out"),
    "params": ("params", None),
    "source": ("problem", "source"),
    "payoff": ("problem", "payoff"),
    "exact": ("problem", "exact"),
    "grid": ("grid", "grid"),
    "xrange": ("grid", "xrange"),
    "trange": ("grid", "trange"),
    "barrier": ("barrier", "abkt"),
    "barrier_h": ("barrier", "H"),
    "rebate": ("barrier", "R"),
    "theta": ("solver", "theta"),
    "far_field": ("solver", "far_field"),
    "near_field": ("solver", "near_field"),
    "newton_iterations": ("solver", "newton_iterations"),
    "generator": ("flow", "generator"),
    "epsilons": ("flow", "epsilons"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    add = common.add_argument
    add("--config", metavar="PATH", help="sectioned key=value file; flags override it")
    add("--case", metavar="ID", help=f"catalog case id ({', '.join(CASE_IDS)})")
    add("--tol", type=float, metavar="REAL", help="tolerance override")
    add("--grid", metavar="NX,NT", help="grid node counts")
    add("--xrange", metavar="LO,HI")
    add("--trange", metavar="LO,HI")
    add("--out", metavar="PATH", help="output file (default: stdout)")
    add("--seed", type=int, metavar="N", help="sampling seed (fallback: $BONDSYM_SEED, then 0)")
    add("--suite", metavar="NAME", help=f"check suite: all, {', '.join(SUITES)}")
    add("--params", metavar="K=V,...", help="alpha,beta,gamma,delta,lambda,rho values")
    add("--source", metavar="EXPR", help="source term f(x, u)")
    add("--payoff", metavar="EXPR", help="terminal payoff g(x) (default 1)")
    add("--exact", metavar="EXPR", help="exact u(x, t) used by Dirichlet rules")
    add("--barrier", metavar="A,B,K,T", help="barrier constants")
    add("--barrier-h", dest="barrier_h", metavar="EXPR", help="barrier H(t)")
    add("--rebate", metavar="EXPR", help="rebate R(t)")
    add("--theta", type=float, metavar="REAL")
    add("--far-field", dest="far_field", choices=("linear", "dirichlet"))
    add("--near-field", dest="near_field", choices=("interior", "dirichlet"))
    add("--newton-iterations", dest="newton_iterations", type=int, metavar="N")
    add("--generator", metavar="XI1;XI2;ETA", help="vector field components (default: 0;1;0)")
    add("--epsilons", metavar="E1,E2,...", help="flow parameters")

    parser = argparse.ArgumentParser(prog="bondsym", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    helps = {
        "verify": "run check suites and write one JSON record per check",
        "oracle": "evaluate a catalog solution on a grid (CSV x,t,u)",
        "price": "finite-difference solve (CSV x,t,u)",
        "transform": "print the reduction chain and the image source",
        "flow": "flow a solution along a generator and check the result",
        "cases": "list catalog cases with their constraints",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name], description=helps[name])
    return parser


# ---------------------------------------------------------------------------
# option resolution
# ---------------------------------------------------------------------------

@dataclass
class _Options:
    ns: argparse.Namespace
    cfg: configparser.ConfigParser

    def get(self, dest: str, default=None):
        v = getattr(self.ns, dest, None)
        if v is not None:
            return v
        section, key = OPTION_KEYS[dest]
        if key is not None and self.cfg.has_option(section, key):
            return self.cfg.get(section, key)
        return default

    def params(self) -> dict[str, float]:
        out: dict[str, float] = {}
        if self.cfg.has_section("params"):
            for k, v in self.cfg.items("params"):
                out[k] = _float(v, f"[params] {k}")
        if self.ns.params:
            for item in self.ns.params.split(","):
                if "=" not in item:
                    raise UsageError(f"--params expects key=value pairs, got {item!r}")
                k, v = item.split("=", 1)
                out[k.strip()] = _float(v, f"--params {k.strip()}")
        bad = set(out) - set(PARAM_NAMES) - {"lam"}
        if bad:
            raise UsageError(f"unknown parameter(s) {sorted(bad)}; expected {', '.join(PARAM_NAMES)}")
        return out


def _float(text, what: str) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise UsageError(f"{what}: expected a number, got {text!r}") from None


def _pair(text: str, what: str, cast=float) -> tuple:
    parts = [s.strip() for s in str(text).split(",")]
    if len(parts) != 2:
        raise UsageError(f"{what} expects two comma-separated values, got {text!r}")
    try:
        return tuple(cast(s) for s in parts)
    except ValueError:
        raise UsageError(f"{what}: cannot parse {text!r}") from None


def _floats(text: str, what: str) -> list[float]:
    return [_float(s, what) for s in str(text).split(",") if s.strip()]


def _load_config(path: str | None) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser(interpolation=None)
    cfg.optionxform = str
    if path:
        if not os.path.exists(path):
            raise UsageError(f"config file not found: {path}")
        try:
            cfg.read(path, encoding="utf-8")
        except configparser.Error as err:
            raise UsageError(f"cannot parse {path}: {err}") from None
        known = {s for s, _ in OPTION_KEYS.values()}
        for section in cfg.sections():
            if section not in known:
                raise UsageError(f"unknown config section [{section}]")
            if section == "params":
                continue
            keys = {k for s, k in OPTION_KEYS.values() if s == section}
            for key in cfg.options(section):
                if key not in keys:
                    raise UsageError(f"unknown key {key!r} in [{section}]")
    return cfg


def _seed(o: _Options) -> int:
    v = o.get("seed")
    if v is None:
        v = os.environ.get("BONDSYM_SEED", 0)
    try:
        return int(v)
    except ValueError:
        raise UsageError(f"seed must be an integer, got {v!r}") from None


def _case(o: _Options, required: bool = False):
    cid = o.get("case")
    if cid is None:
        if required:
            raise UsageError(f"--case is required; one of {', '.join(CASE_IDS)}")
        return None
    if cid not in CASE_IDS:
        raise UsageError(f"unknown case {cid!r}; expected one of {', '.join(CASE_IDS)}")
    p = o.params()
    constants = {}
    if o.get("barrier") is not None:
        if cid not in BARRIER_IDS:
            raise UsageError(f"{cid} has no barrier")
        a, b, K, T = _barrier_constants(o)
        constants = {"a": a, "b": b, "K": K, "T": T}
    params = None
    if p:
        base = get_case(cid).params.as_dict()
        base.update({("lambda" if k == "lam" else k): v for k, v in p.items()})
        params = Params.from_mapping(base)
    return get_case(cid, params, **constants)


def _barrier_constants(o: _Options) -> tuple[float, float, float, float]:
    vals = _floats(o.get("barrier"), "--barrier")
    if len(vals) != 4:
        raise UsageError("--barrier expects A,B,K,T")
    return tuple(vals)


def _problem(o: _Options):
    """(problem, exact-or-None, case-or-None) from --case or --params/--source."""
    case = _case(o)
    if case is not None and o.get("source") is None and not o.params():
        return case.problem, case.solution, case
    if case is not None:
        p = case.params
    else:
        p = Params.from_mapping({"alpha": 0.0, "beta": 0.0, "gamma": 0.0, "delta": 0.5, "lambda": 0.0,
                                 "rho": 1.0, **o.params()})
    source = o.get("source")
    if source is None:
        if case is None:
            raise UsageError("give --case or --source")
        prob = PdeProblem(p, case.source)
    else:
        prob = PdeProblem.from_text(p, source)
    exact = o.get("exact")
    if exact is not None:
        exact = ex.bind(ex.parse(exact, PARAM_NAMES), p.as_dict())
    elif case is not None:
        exact = case.solution
    return prob, exact, case


def _grid_for(o: _Options, default_x, default_t, default_n=(41, 41)) -> tuple[tuple, tuple, tuple]:
    n = _pair(o.get("grid"), "--grid", int) if o.get("grid") is not None else default_n
    xr = _pair(o.get("xrange"), "--xrange") if o.get("xrange") is not None else default_x
    tr = _pair(o.get("trange"), "--trange") if o.get("trange") is not None else default_t
    if min(n) < 2:
        raise UsageError("--grid needs at least 2 nodes in each direction")
    return n, xr, tr


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _write(o: _Options, text: str, stdout) -> None:
    path = o.get("out")
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def _csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("x", "t", "u"))
    for x, t, u in rows:
        w.writerow((f"{x:.17g}", f"{t:.17g}", f"{u:.17g}"))
    return buf.getvalue()


def _reports_text(reports: Sequence[ResidualReport]) -> str:
    return "".join(json.dumps(r.record()) + "\n" for r in reports)


def _summary(reports: Sequence[ResidualReport], stream) -> None:
    for r in reports:
        mark = "PASS" if r.passed else "FAIL"
        rel = ">" if r.expect == "above" else "<"
        stream.write(f"{mark} {r.check:<34} {r.case_id:<28} max={r.max_abs_residual:.3e} {rel} {r.tol:.1e}\n")
    bad = sum(not r.passed for r in reports)
    stream.write(f"{len(reports) - bad}/{len(reports)} checks passed\n")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_cases(o: _Options, stdout, stderr) -> int:
    lines = []
    for cid in CASE_IDS:
        c = get_case(cid)
        kind = "barrier" if c.is_barrier else "terminal"
        lines.append(f"{cid:<14} {kind:<9} {c.status:<10} {constraint_summary(cid)}\n")
    _write(o, "".join(lines), stdout)
    return 0


def _cmd_verify(o: _Options, stdout, stderr) -> int:
    suite = o.get("suite", "all")
    if suite != "all" and suite not in SUITES:
        raise UsageError(f"unknown suite {suite!r}; expected one of all, {', '.join(SUITES)}")
    case = o.get("case")
    if case is not None and case not in CASE_IDS:
        raise UsageError(f"unknown case {case!r}")
    reports = run_suite(suite, seed=_seed(o), case=case)
    tol = o.get("tol")
    if tol is not None:
        tol = _float(tol, "--tol")
        reports = [r if r.expect == "above" else r.with_tol(tol) for r in reports]
    _write(o, _reports_text(reports), stdout)
    _summary(reports, stderr)
    return 0 if reports and all(r.passed for r in reports) else 1


def _cmd_oracle(o: _Options, stdout, stderr) -> int:
    c = _case(o, required=True)
    (nx, nt), xr, tr = _grid_for(o, c.region.x, c.region.t)
    g = uniform_grid(xr, tr, nx, nt)
    X, T = g.mesh()
    with np.errstate(all="ignore"):
        U = np.asarray(ex.evaluate(c.solution, {"x": X, "t": T}), dtype=float) * np.ones_like(X)
    s = Surface(g, U)
    _write(o, _csv(s.to_rows()), stdout)
    if not np.all(s.mask):
        stderr.write(f"{int((~s.mask).sum())} grid points outside the solution's domain were skipped\n")
    return 0


def _solver_config(o: _Options) -> SolverConfig:
    kw = {}
    if o.get("theta") is not None:
        kw["theta"] = _float(o.get("theta"), "theta")
    for key in ("far_field", "near_field"):
        if o.get(key) is not None:
            kw[key] = o.get(key)
    if o.get("newton_iterations") is not None:
        kw["newton_iterations"] = int(o.get("newton_iterations"))
    try:
        return SolverConfig(**kw)
    except ValueError as err:
        raise UsageError(str(err)) from None


def _barrier_spec(o: _Options, prob: PdeProblem, case) -> BarrierSpec | None:
    H = o.get("barrier_h")
    if H is None:
        return case.boundary if case is not None and case.is_barrier else None
    a, b, K, T = _barrier_constants(o) if o.get("barrier") is not None else (1.0, 0.5, 1.0, 1.0)
    names = set(PARAM_NAMES) | {"a", "b", "K", "T"}
    k = {**prob.params.as_dict(), "a": a, "b": b, "K": K, "T": T}
    He = ex.bind(ex.parse(H, names), k)
    R = o.get("rebate")
    Re = ex.bind(ex.parse(R, names), k) if R is not None else ex.const(0.0)
    return BarrierSpec(He, Re, a, b, K, T)


def _cmd_price(o: _Options, stdout, stderr) -> int:
    prob, exact, case = _problem(o)
    cfg = _solver_config(o)
    spec = _barrier_spec(o, prob, case)
    T = spec.T if spec is not None else (case.T if case is not None else 1.0)
    dx = case.region.x if case is not None else (0.5, 2.0)
    (nx, nt), xr, tr = _grid_for(o, dx, (0.0, T), (101, 101))
    payoff_text = o.get("payoff")
    if payoff_text is not None:
        payoff = ex.bind(ex.parse(payoff_text, PARAM_NAMES), prob.params.as_dict())
    elif exact is not None:
        payoff = exact
    else:
        payoff = ex.const(1.0)
    needs_exact = "dirichlet" in (cfg.far_field, cfg.near_field)
    if needs_exact and exact is None:
        raise UsageError("Dirichlet boundary rules need --exact or --case")
    g = make_grid(prob.params, xr, tr, nx, nt)
    if spec is not None:
        s = solve_barrier(prob, g, spec, payoff, cfg, boundary=exact)
    else:
        s = solve_terminal(prob, g, payoff, cfg, boundary=exact if needs_exact else None)
    _write(o, _csv(s.to_rows()), stdout)
    return 0


def _cmd_transform(o: _Options, stdout, stderr) -> int:
    case = _case(o)
    if case is not None and not o.params():
        p, source = case.params, case.source
    else:
        if not o.params() and case is None:
            raise UsageError("give --case or --params")
        base = case.params.as_dict() if case is not None else {
            "alpha": 0.0, "beta": 0.0, "gamma": 0.0, "delta": 0.5, "lambda": 0.0, "rho": 1.0}
        base.update({("lambda" if k == "lam" else k): v for k, v in o.params().items()})
        p = Params.from_mapping(base)
        source = case.source if case is not None else None
    if o.get("source") is not None:
        source = PdeProblem.from_text(p, o.get("source")).source
    chain = reduction_chain(p)
    lines = [chain.describe()]
    if source is not None:
        lines.append(f"  source: {ex.render(source)}")
        lines.append(f"  image source: {ex.render(chain.transform_source(source))}")
    _write(o, "\n".join(lines) + "\n", stdout)
    return 0


def _generator(o: _Options) -> Generator:
    text = o.get("generator", "0;1;0")
    parts = [s.strip() for s in text.split(";")]
    if len(parts) != 3:
        raise UsageError("--generator expects XI1;XI2;ETA")
    return Generator.from_text(*parts, label=text)


def _cmd_flow(o: _Options, stdout, stderr) -> int:
    prob, exact, case = _problem(o)
    if exact is None:
        raise UsageError("flow needs a solution: give --case or --exact")
    g = _generator(o)
    eps = _floats(o.get("epsilons", "0.1,-0.1"), "--epsilons")
    default = case.region if case is not None else None
    (nx, nt), xr, tr = _grid_for(o, default.x if default else (0.5, 2.0),
                                 default.t if default else (0.5, 0.99), (61, 61))
    grid = Grid(np.linspace(*xr, nx), np.linspace(*tr, nt))
    tol = _float(o.get("tol", 1e-4), "--tol")
    rep = solution_to_solution_check(g, prob, exact, eps, grid, tol, case.id if case else "custom")
    _write(o, _reports_text([rep]), stdout)
    _summary([rep], stderr)
    return 0 if rep.passed else 1


_HANDLERS = {"cases": _cmd_cases, "verify": _cmd_verify, "oracle": _cmd_oracle, "price": _cmd_price,
             "transform": _cmd_transform, "flow": _cmd_flow}

# Failures in the numerics or in the supplied mathematics (exit 1).
_DOMAIN_ERRORS = (ArithmeticError, RuntimeError, ex.ExprError, ValueError)


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        o = _Options(ns, _load_config(ns.config))
        return _HANDLERS[ns.command](o, stdout, stderr)
    except UsageError as err:
        stderr.write(f"bondsym {ns.command}: usage error: {err}\n")
        return 2
    except (ex.ExprSyntaxError, ex.UndeclaredIdentifierError) as err:
        stderr.write(f"bondsym {ns.command}: usage error: {err}\n")
        return 2
    except _DOMAIN_ERRORS as err:
        stderr.write(f"bondsym {ns.command}: {type(err).__name__}: {err}\n")
        return 1
    except OSError as err:
        stderr.write(f"bondsym {ns.command}: {err}\n")
        return 2


def main(argv: Sequence[str] | None = None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
