"""Batch front end.

    semibif <command> --config run.json --out outdir [--format csv,json,svg] [--seed N]
    semibif compare reportA.json reportB.json --out outdir

Exit codes: 0 success, 1 honest failure (e.g. search exhausted), 2 config
error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import io
from .continuation import BracketError, critical_eps_search, extremal_lambda, trace_branch
from .degree import (Box, BoundaryCrossingError, DegreeError, DiscreteMap,
                     fd_extremal_lambda, homotopy_sweep)
from .nonlinearity import DomainError, InfeasibleAmplitudeError, QuadratureError
from .solvers import ProblemSpec, StepUnderflowError, minimal_branch, parabolic_evolve, poisson_profile
from .solvers.shooting import BranchTermination
from .topology import (DiagramReport, SearchExhausted, build_report, compare_diagrams, detect_folds,
                       detect_minimal_jump, instability_pipeline, minimal_envelope,
                       minimal_lambda_grid)

log = logging.getLogger("semibif")

EXIT_OK, EXIT_HONEST, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
COMMANDS = ("diagram", "minimal", "perturb", "classify", "compare", "poisson", "degree", "evolve",
            "critical-eps")
FORMATS = ("csv", "json", "svg")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_posint = {"type": "integer", "minimum": 1}
_numlist = {"type": "array", "items": _num}

NONLINEARITY = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["constant", "linear", "exponential", "arrhenius", "perturbed"]},
        "eps": _pos,
        "value": _pos,
        "base": {"$ref": "#/$defs/nonlinearity"},
        "bump": {
            "type": "object",
            "properties": {"m": _num, "width": _pos, "amplitude": _num, "rise": _pos,
                           "monotone": {"type": "boolean"}},
            "required": ["m", "width", "amplitude"],
            "additionalProperties": False,
        },
    },
    "required": ["kind"],
    "additionalProperties": False,
}

SCHEMA = {
    "$defs": {"nonlinearity": NONLINEARITY},
    "type": "object",
    "properties": {
        "problem": {
            "type": "object",
            "properties": {"d": {"enum": [1, 2, 3]}, "L": _pos, "R": _pos,
                           "f": {"$ref": "#/$defs/nonlinearity"}},
            "required": ["d", "f"],
            "additionalProperties": False,
        },
        "solver": {
            "type": "object",
            "properties": {"alpha_max": _pos, "n_initial": _posint, "rel_tol": _pos, "grid_n": _posint,
                           "tol": _pos},
            "additionalProperties": False,
        },
        "lambda_grid": {
            "type": "object",
            "properties": {"start": _num, "stop": _num, "num": _posint, "values": _numlist},
            "additionalProperties": False,
        },
        "perturb": {
            "type": "object",
            "properties": {"eps_amp": _pos, "m_grid": _numlist, "widths": _numlist, "rises": _numlist,
                           "amplitude": _num},
            "required": ["eps_amp"],
            "additionalProperties": False,
        },
        "critical_eps": {
            "type": "object",
            "properties": {"bracket": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                           "eps_tol": _pos},
            "additionalProperties": False,
        },
        "poisson": {
            "type": "object",
            "properties": {"d": {"enum": [1, 2, 3]}, "R": _pos, "rho": _pos, "n": _posint},
            "required": ["d", "R", "rho"],
            "additionalProperties": False,
        },
        "degree": {
            "type": "object",
            "properties": {
                "map": {"enum": ["gelfand_fd", "identity"]},
                "n": _posint,
                "L": _pos,
                "lambdas": _numlist,
                "lambda_fractions": _numlist,
                "box": {"type": "object", "properties": {"lo": {}, "hi": {}},
                        "required": ["lo", "hi"], "additionalProperties": False},
                "n_starts": _posint,
            },
            "required": ["n", "box"],
            "additionalProperties": False,
        },
        "evolve": {
            "type": "object",
            "properties": {"lambda": _pos, "t_max": _pos, "dt_max": _pos, "steady_tol": _pos,
                           "grid_n": _posint},
            "required": ["lambda"],
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

REQUIRED = {
    "diagram": ("problem",), "minimal": ("problem",), "perturb": ("problem", "perturb"),
    "classify": ("problem",), "poisson": ("poisson",), "degree": ("degree",),
    "evolve": ("problem", "evolve"), "critical-eps": ("problem",),
}


class ConfigError(ValueError):
    pass


class HonestFailure(RuntimeError):
    pass


def validate_config(cfg, command=None):
    """Schema validation; errors name the offending path."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {e.message}")
    for key in REQUIRED.get(command, ()):
        if key not in cfg:
            raise ConfigError(f"<root>: command {command!r} needs a {key!r} block")
    return cfg


def load_config(path, command=None):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return validate_config(cfg, command)


def problem_from(cfg):
    p = cfg["problem"]
    if p["d"] == 1 and "L" not in p:
        raise ConfigError("problem: d = 1 needs L")
    if p["d"] > 1 and "R" not in p:
        raise ConfigError("problem: d >= 2 needs R")
    try:
        return ProblemSpec.from_dict(p)
    except (DomainError, KeyError, InfeasibleAmplitudeError) as exc:
        raise ConfigError(f"problem: {exc}") from exc


def _solver(cfg):
    return cfg.get("solver", {})


def _alpha_max(cfg, problem):
    return float(_solver(cfg).get("alpha_max", 100.0 if problem.d == 1 else 40.0))


def _trace(cfg, problem):
    s = _solver(cfg)
    kw = {}
    if "n_initial" in s:
        kw["n_initial"] = s["n_initial"]
    if "rel_tol" in s:
        kw["rel_tol"] = s["rel_tol"]
    return trace_branch(problem, _alpha_max(cfg, problem), **kw)


class Emitter:
    def __init__(self, out, formats):
        self.out = Path(out)
        self.formats = set(formats)
        self.written = []

    def json(self, name, obj):
        if "json" in self.formats:
            self.written.append(io.write_json(self.out / name, obj))

    def csv(self, name, text):
        if "csv" in self.formats:
            self.written.append(io.atomic_write(self.out / name, text))

    def svg(self, name, curves, folds=(), jumps=(), title=""):
        if "svg" in self.formats:
            self.written.append(io.write_svg(self.out / name, curves, folds, jumps, title))


def _diagram(cfg, em, seed):
    problem = problem_from(cfg)
    branch = _trace(cfg, problem)
    report = build_report(problem, branch)
    em.csv("branch.csv", io.branch_csv(branch, report.folds))
    payload = report.to_dict()
    payload["problem"] = problem.to_dict()
    payload["termination"] = branch.termination
    em.json("report.json", payload)
    em.svg("diagram.svg", [(branch.lam, branch.alpha, "black")], report.folds, report.minimal_jumps,
           _title(problem))
    return EXIT_OK


def _classify(cfg, em, seed):
    problem = problem_from(cfg)
    branch = _trace(cfg, problem)
    report = build_report(problem, branch)
    extremal = extremal_lambda(problem, branch)
    em.json("classification.json", {"case": report.case, "lambda_m": report.lambda_m,
                                     "lambda_sharp": report.lambda_sharp,
                                     "extremal": extremal.to_dict(),
                                     "fold_count": len(report.folds), "problem": problem.to_dict()})
    em.json("report.json", report.to_dict())
    return EXIT_OK


def _lambda_grid(cfg, default_stop):
    g = cfg.get("lambda_grid", {})
    if "values" in g:
        return np.asarray(g["values"], dtype=float)
    start = g.get("start", default_stop / 50.0)
    stop = g.get("stop", default_stop)
    return np.linspace(start, stop, g.get("num", 50))


def _minimal(cfg, em, seed):
    problem = problem_from(cfg)
    s = _solver(cfg)
    branch = _trace(cfg, problem)
    top = float(np.nanmax(branch.lam))
    lambdas = _lambda_grid(cfg, top)
    res = minimal_branch(problem, lambdas, grid_n=s.get("grid_n"), tol=s.get("tol", 1e-10))
    ok = np.isfinite(res.alphas)
    # jumps from the lower envelope of the trace; monotone iteration is the cross-check
    folds = detect_folds(branch)
    envelope = minimal_envelope(branch, minimal_lambda_grid(branch, folds), folds)
    jumps = detect_minimal_jump(envelope)
    rows = [(float(l), float(a), float(e)) for l, a, e in
            zip(res.lambdas, res.alphas, minimal_envelope(branch, res.lambdas, folds).alpha)]
    em.csv("minimal.csv", io.table_csv(("lambda", "alpha", "alpha_envelope"), rows))
    em.json("minimal.json", {"lambdas": res.lambdas, "alphas": res.alphas, "beyond": res.beyond,
                             "unresolved": res.unresolved,
                             "lambda_star_bracket": res.lambda_star_bracket,
                             "jumps": [list(j) for j in jumps.jumps],
                             "flags": [list(f) for f in jumps.flags]})
    em.svg("minimal.svg", [(branch.lam, branch.alpha, "#aaaaaa"),
                           (res.lambdas[ok], res.alphas[ok], "black")], (), jumps.jumps,
           _title(problem))
    return EXIT_OK


def _perturb(cfg, em, seed):
    problem = problem_from(cfg)
    p = cfg["perturb"]
    kw = {k: p[k] for k in ("m_grid", "widths", "rises", "amplitude") if k in p}
    try:
        res = instability_pipeline(problem.f, problem, p["eps_amp"],
                                   alpha_max=_alpha_max(cfg, problem), **kw)
    except SearchExhausted as exc:
        em.json("perturb.json", {"status": "search-exhausted", "tried": exc.tried})
        raise HonestFailure(str(exc)) from exc
    em.json("perturb.json", res.to_dict())
    em.json("before.json", res.before.to_dict())
    em.json("after.json", res.after.to_dict())
    em.csv("before.csv", io.branch_csv(res.before_branch, res.before.folds))
    em.csv("after.csv", io.branch_csv(res.after_branch, res.after.folds))
    em.svg("perturb.svg", [(res.before_branch.lam, res.before_branch.alpha, "#999999"),
                           (res.after_branch.lam, res.after_branch.alpha, "black")],
           res.after.folds, res.after.minimal_jumps, _title(problem) + " perturbed")
    return EXIT_OK if res.placement is not None else EXIT_HONEST


def _compare(paths, em):
    try:
        a, b = (DiagramReport.from_dict(io.read_json(pth)) for pth in paths)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read report: {exc}") from exc
    verdict = compare_diagrams(a, b)
    em.json("verdict.json", verdict.to_dict())
    print(verdict)
    return EXIT_OK


def _poisson(cfg, em, seed):
    p = cfg["poisson"]
    try:
        prof = poisson_profile(p["d"], p["R"], p["rho"])
    except DomainError as exc:
        raise ConfigError(f"poisson: {exc}") from exc
    em.json("poisson.json", prof.to_dict())
    r = np.linspace(0.0, prof.R, p.get("n", 201))
    em.csv("profile.csv", io.table_csv(io.PROFILE_COLUMNS, zip(r, prof(r))))
    return EXIT_OK


def _degree(cfg, em, seed):
    c = cfg["degree"]
    n = c["n"]
    box = Box(np.broadcast_to(np.asarray(c["box"]["lo"], float), (n,)),
              np.broadcast_to(np.asarray(c["box"]["hi"], float), (n,)))
    if c.get("map", "gelfand_fd") == "identity":
        fmap = DiscreteMap.identity(n)
        lam_star = None
    else:
        fmap = DiscreteMap.gelfand_fd(n, L=c.get("L", 1.0))
        lam_star = fd_extremal_lambda(fmap)
    lambdas = list(c.get("lambdas", []))
    if "lambda_fractions" in c:
        if lam_star is None:
            raise ConfigError("degree/lambda_fractions: needs the gelfand_fd map")
        lambdas += [fr * lam_star for fr in c["lambda_fractions"]]
    if not lambdas:
        lambdas = [0.0]
    sweep = homotopy_sweep(fmap, sorted(lambdas), box, seed=seed,
                           n_starts=c.get("n_starts", 200))
    em.json("degree.json", {"lambda_star_fd": lam_star, "lambdas": sweep.lambdas,
                            "results": [r.to_dict() for r in sweep.results],
                            "constant": sweep.constant,
                            "crossing": list(sweep.crossing) if sweep.crossing else None,
                            "message": sweep.message})
    return EXIT_OK if sweep.constant else EXIT_HONEST


def _evolve(cfg, em, seed):
    problem = problem_from(cfg)
    e = cfg["evolve"]
    kw = {k: e[k] for k in ("t_max", "dt_max", "steady_tol", "grid_n") if k in e}
    res = parabolic_evolve(problem, e["lambda"], **kw)
    em.json("evolve.json", {"outcome": res.outcome, "time": res.time, "sup_norm": res.sup_norm,
                            "rate": res.rate, "residual": res.residual, "lambda": e["lambda"],
                            "problem": problem.to_dict()})
    em.csv("profile.csv", io.table_csv(io.PROFILE_COLUMNS, zip(res.r, res.u)))
    em.csv("history.csv", io.table_csv(("t", "sup_norm"), (tuple(h) for h in res.history)))
    return EXIT_OK


def _critical(cfg, em, seed):
    problem = problem_from(cfg)
    c = cfg.get("critical_eps", {})
    (lo, hi), traces = critical_eps_search(problem.d, problem.size, tuple(c.get("bracket", (0.2, 0.3))),
                                           alpha_max=_alpha_max(cfg, problem),
                                           eps_tol=c.get("eps_tol", 5e-4))
    em.json("critical_eps.json", {"bracket": [lo, hi], "traces": traces, "d": problem.d,
                                  "size": problem.size})
    return EXIT_OK


def _title(problem):
    return f"{problem.f.kind} d={problem.d}"


HANDLERS = {"diagram": _diagram, "classify": _classify, "minimal": _minimal, "perturb": _perturb,
            "poisson": _poisson, "degree": _degree, "evolve": _evolve, "critical-eps": _critical}


def build_parser():
    ap = argparse.ArgumentParser(prog="semibif", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("reports", nargs="*", help="two report JSON files for `compare`")
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--format", default="csv,json,svg", help="comma list of csv,json,svg")
    ap.add_argument("--seed", type=int, default=0, help="multistart seed")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def run(command, config_path=None, out_dir=".", formats=FORMATS, seed=0, reports=()):
    """Dispatch one command; returns the exit code."""
    em = Emitter(out_dir, formats)
    try:
        bad = set(formats) - set(FORMATS)
        if bad:
            raise ConfigError(f"unknown format(s): {', '.join(sorted(bad))}")
        if command == "compare":
            if len(reports) != 2:
                raise ConfigError("compare needs exactly two report files")
            return _compare(reports, em)
        if config_path is None:
            raise ConfigError(f"{command} needs --config")
        cfg = load_config(config_path, command)
        return HANDLERS[command](cfg, em, seed)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (HonestFailure, BracketError, BoundaryCrossingError) as exc:
        log.error("%s", exc)
        return EXIT_HONEST
    except (QuadratureError, StepUnderflowError, DegreeError, BranchTermination, DomainError,
            FloatingPointError, np.linalg.LinAlgError) as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    formats = tuple(f.strip() for f in args.format.split(",") if f.strip())
    return run(args.command, args.config, args.out, formats, args.seed, args.reports)


if __name__ == "__main__":
    sys.exit(main())
