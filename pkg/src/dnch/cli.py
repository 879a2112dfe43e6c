"""Command line front end: ``dnch {run,mms,sweep-lambda,contdep,check}``.

Exit codes: 0 success, 1 I/O problem, 2 configuration error, 3 solver
failure, 4 invariant violation.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import platform
import re
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import grid as gr
from .errors import (
    ConfigurationError,
    DomainViolation,
    InvariantViolation,
    NumericalError,
    UnsupportedError,
)

__all__ = ["ExperimentConfig", "parse_config", "execute", "main", "EXIT_CODES"]

log = logging.getLogger(__name__)

EXIT_CODES = {"ok": 0, "io": 1, "config": 2, "solver": 3, "invariant": 4}
EXPERIMENTS = ("run", "mms", "sweep-lambda", "contdep", "check")

MODEL_KEYS = {"psi", "beta", "sigma", "M", "alpha", "K", "g", "u0", "T"}
TOP_KEYS = MODEL_KEYS | {"experiment", "grid", "solver", "output", "mms", "sweep", "contdep"}
SOLVER_KEYS = {
    "lambda": "lam",
    "tau": "tau",
    "newton_tol": "newton_tol",
    "newton_max": "newton_max",
    "cg_tol": "cg_tol",
    "cg_max": "cg_max",
    "damping_min": "damping_min",
    "dirichlet_mode": "dirichlet_mode",
    "green_tol": "green_tol",
}
GRID_KEYS = {"dim", "n", "lengths"}
OUTPUT_KEYS = {"dir", "dump_every"}
KNOB_DEFAULTS = {
    "mms": {"taus": [4e-3, 2e-3, 1e-3], "n_time": 129, "T_time": 0.1,
            "ns": [17, 33, 65, 129], "tau_space": 2e-5, "T_space": 0.01},
    "sweep": {"lambdas": [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]},
    "contdep": {"scales": [1.0, 0.5, 0.25, 0.125],
                "delta_g": {"kind": "separable", "amplitude": 1.0, "mode": 2, "time": "sin", "rate": 3.0},
                "delta_u0": {"kind": "cosine", "mean": 0.0, "amplitude": 0.1, "mode": 2},
                "bounds": None},
}
DEFAULTS = {"sigma": 1.0, "M": 1.0, "alpha": 1.0, "lambda": 1e-3, "tau": 1e-2}


@dataclass
class ExperimentConfig:
    """Validated experiment description; ``document`` is the normalised echo."""

    experiment: str
    grid: gr.Grid
    params: object
    solver: object
    out_dir: str
    dump_every: int
    knobs: dict
    document: dict = field(default_factory=dict)


class _DuplicateKey(ValueError):
    def __init__(self, key):
        super().__init__(key)
        self.key = key


def _no_duplicates(pairs):
    seen = {}
    for k, v in pairs:
        if k in seen:
            raise _DuplicateKey(k)
        seen[k] = v
    return seen


def _locate(text, key):
    out = []
    for m in re.finditer(r'"%s"\s*:' % re.escape(key), text):
        line = text.count("\n", 0, m.start()) + 1
        col = m.start() - (text.rfind("\n", 0, m.start()) + 1) + 1
        out.append(f"line {line} col {col}")
    return out


def _load(text):
    try:
        return json.loads(text, object_pairs_hook=_no_duplicates)
    except _DuplicateKey as exc:
        where = ", ".join(_locate(text, exc.key)) or "unknown location"
        raise ConfigurationError(f"duplicate key {exc.key!r} ({where})") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"malformed configuration: {exc.msg} at line {exc.lineno} col {exc.colno}") from None


def _collect(problems, func, *args, **kwargs):
    try:
        return func(*args, **kwargs)
    except ConfigurationError as exc:
        problems.extend(exc.violations)
    except (TypeError, ValueError, KeyError) as exc:
        problems.append(f"{type(exc).__name__}: {exc}")
    return None


def _build_grid(spec):
    spec = dict(spec)
    unknown = set(spec) - GRID_KEYS
    if unknown:
        raise ConfigurationError(f"unknown key(s) in grid: {sorted(unknown)}")
    if "n" not in spec:
        raise ConfigurationError("grid needs 'n'")
    dim = int(spec.get("dim", 1))
    if dim not in (1, 2):
        raise ConfigurationError(f"grid dim must be 1 or 2, got {dim}")
    return gr.Grid.uniform(spec["n"], spec.get("lengths", 1.0), dim=dim)


def _build_solver(spec):
    from .stepper import SolverConfig

    spec = dict(spec)
    unknown = set(spec) - set(SOLVER_KEYS)
    if unknown:
        raise ConfigurationError(f"unknown key(s) in solver: {sorted(unknown)}")
    kwargs = {SOLVER_KEYS[k]: v for k, v in spec.items()}
    for k in ("newton_max", "cg_max"):
        if k in kwargs and isinstance(kwargs[k], float) and kwargs[k].is_integer():
            kwargs[k] = int(kwargs[k])
    return SolverConfig(**kwargs)


def parse_config(text, experiment=None):
    """Parse and validate a JSON configuration document.

    Every problem found is reported at once through
    :class:`ConfigurationError.violations`.  A manifest written by
    :func:`execute` is accepted as well (its ``config`` entry is used).
    """
    from .model import ModelParams, profile_from_config, source_from_config
    from .stepper import check_compatible

    doc = _load(text)
    if not isinstance(doc, dict):
        raise ConfigurationError("configuration must be a JSON object")
    if "manifest_version" in doc and "config" in doc:
        doc = doc["config"]
    problems = []
    unknown = sorted(set(doc) - TOP_KEYS)
    if unknown:
        problems.append(f"unknown top-level key(s): {unknown}")
    experiment = experiment or doc.get("experiment", "run")
    if experiment not in EXPERIMENTS:
        problems.append(f"unknown experiment {experiment!r}; expected one of {list(EXPERIMENTS)}")
    for required in ("grid", "psi", "beta", "T"):
        if required not in doc:
            problems.append(f"missing required key {required!r}")

    grid = _collect(problems, _build_grid, doc["grid"]) if "grid" in doc else None
    solver_spec = {"lambda": DEFAULTS["lambda"], "tau": DEFAULTS["tau"], **doc.get("solver", {})}
    solver = _collect(problems, _build_solver, solver_spec)

    model_spec = {k: doc[k] for k in MODEL_KEYS if k in doc}
    for k in ("sigma", "M", "alpha"):
        model_spec.setdefault(k, DEFAULTS[k])
    params = None
    if {"psi", "beta", "T"} <= set(model_spec):
        params = _collect(problems, ModelParams.from_config, model_spec)
    if params is not None and solver is not None:
        _collect(problems, check_compatible, params, solver)
    elif params is not None and params.K > 0:
        tau = solver_spec.get("tau")
        if isinstance(tau, (int, float)) and tau > params.sigma / (2.0 * params.K):
            problems.append(f"tau = {tau} violates tau <= sigma/(2K) = {params.sigma / (2 * params.K)}")

    output = dict(doc.get("output", {}))
    bad = set(output) - OUTPUT_KEYS
    if bad:
        problems.append(f"unknown key(s) in output: {sorted(bad)}")
    dump_every = output.get("dump_every", 0)
    if not (isinstance(dump_every, int) and dump_every >= 0):
        problems.append(f"output.dump_every must be a nonnegative integer, got {dump_every!r}")

    knobs = {}
    for section, defaults in KNOB_DEFAULTS.items():
        given = dict(doc.get(section, {}))
        bad = set(given) - set(defaults)
        if bad:
            problems.append(f"unknown key(s) in {section}: {sorted(bad)}")
        knobs[section] = {**defaults, **{k: v for k, v in given.items() if k in defaults}}
    if experiment == "contdep":
        _collect(problems, source_from_config, knobs["contdep"]["delta_g"])
        _collect(problems, profile_from_config, knobs["contdep"]["delta_u0"])
    if experiment == "sweep-lambda":
        from .diagnostics import _check_lambdas

        _collect(problems, _check_lambdas, knobs["sweep"]["lambdas"])

    if problems:
        raise ConfigurationError("invalid configuration:\n  " + "\n  ".join(problems), problems)

    document = {
        "experiment": experiment,
        "grid": {"dim": grid.dim, "n": list(grid.shape), "lengths": list(grid.lengths)},
        **params.to_config(),
        "solver": {k: getattr(solver, v) for k, v in SOLVER_KEYS.items()},
        "output": {"dir": output.get("dir", "out"), "dump_every": dump_every},
        **knobs,
    }
    document.pop("K", None)
    return ExperimentConfig(experiment, grid, params, solver, document["output"]["dir"], dump_every, knobs, document)


# -- execution ----------------------------------------------------------------


def _prepare_out(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    probe = os.path.join(out_dir, ".write_probe")
    with open(probe, "w") as fh:
        fh.write("")
    os.remove(probe)


def _dump_fields(out_dir, traj, every):
    if not every:
        return []
    paths = []
    fdir = os.path.join(out_dir, "fields")
    os.makedirs(fdir, exist_ok=True)
    from .io import write_field

    for n, s in enumerate(traj.states):
        if n % every == 0 or n == len(traj.states) - 1:
            for name in ("u", "mu", "v"):
                p = os.path.join(fdir, f"{name}_{n:06d}.csv")
                paths.append(write_field(p, traj.grid, getattr(s, name), name, s.t))
    return paths


def _exec_run(cfg, out, jobs, plots, timings):
    from .diagnostics import energy_balance
    from .io import write_gnuplot, write_series
    from .stepper import run

    t0 = time.perf_counter()
    traj = run(cfg.params, cfg.solver, cfg.grid)
    timings["run"] = time.perf_counter() - t0
    paths = write_series(out, traj)
    paths += _dump_fields(out, traj, cfg.dump_every)
    if plots:
        paths.append(write_gnuplot(paths[0]))
    summary = {
        "steps": len(traj.states) - 1,
        "final_time": traj.final.t,
        "energy_balance_residual": energy_balance(traj, cfg.params, cfg.solver),
        "max_newton_iterations": max([s.info.get("newton_iterations", 0) for s in traj.states[1:]], default=0),
    }
    return paths, summary


def _exec_mms(cfg, out, jobs, plots, timings):
    from .io import write_gnuplot, write_table
    from .manufactured import convergence_in_space, convergence_in_time

    k = cfg.knobs["mms"]
    params = cfg.params
    t0 = time.perf_counter()
    lengths = cfg.grid.lengths[0]
    tgrid = gr.Grid.uniform(int(k["n_time"]), lengths)
    ttab = convergence_in_time(params.replace(T=float(k["T_time"])), cfg.solver, tgrid, k["taus"], jobs)
    timings["time_study"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    stab = convergence_in_space(
        params.replace(T=float(k["T_space"])), cfg.solver.replace(tau=float(k["tau_space"])), k["ns"], lengths, jobs
    )
    timings["space_study"] = time.perf_counter() - t0
    paths = [
        write_table(os.path.join(out, "mms_time.csv"), ("tau", "error", "order"), ttab.rows()),
        write_table(os.path.join(out, "mms_space.csv"), ("n", "error", "order"), stab.rows()),
    ]
    if plots:
        paths += [write_gnuplot(p, logscale=True) for p in list(paths)]
    return paths, {"temporal_order": ttab.min_order, "spatial_order": stab.min_order}


def _exec_sweep(cfg, out, jobs, plots, timings):
    from .diagnostics import lambda_sweep
    from .io import write_gnuplot, write_table

    t0 = time.perf_counter()
    rep = lambda_sweep(cfg.params, cfg.solver, cfg.knobs["sweep"]["lambdas"], cfg.grid, jobs)
    timings["sweep"] = time.perf_counter() - t0
    lams = rep.lambdas
    rows = [(j, lams[j], lams[j + 1], du, dx) for j, (du, dx) in enumerate(zip(rep.d_u, rep.d_xi))]
    paths = [write_table(os.path.join(out, "lambda_sweep.csv"), ("j", "lambda_j", "lambda_next", "d_u", "d_xi"), rows)]
    if plots:
        paths.append(write_gnuplot(paths[0]))
    summary = {"monotone": rep.monotone, "failures": rep.failures, "oracle_distance": rep.oracle_distance}
    if rep.failures:
        raise _PartialFailure(paths, summary)
    return paths, summary


def _exec_contdep(cfg, out, jobs, plots, timings):
    from .diagnostics import contdep_experiment
    from .io import write_gnuplot, write_table
    from .model import profile_from_config, source_from_config

    k = cfg.knobs["contdep"]
    pert = (source_from_config(k["delta_g"]), profile_from_config(k["delta_u0"]))
    t0 = time.perf_counter()
    reps = contdep_experiment(cfg.params, pert, k["scales"], cfg.solver, cfg.grid, k["bounds"], jobs)
    timings["contdep"] = time.perf_counter() - t0
    rows = [(r.scale, r.lhs, r.rhs, r.ratio, r.confined) for r in reps]
    paths = [write_table(os.path.join(out, "contdep.csv"), ("scale", "lhs", "rhs", "ratio", "confined"), rows)]
    if plots:
        paths.append(write_gnuplot(paths[0]))
    ratios = [r.ratio for r in reps if math.isfinite(r.ratio)]
    summary = {
        "ratio_spread": max(ratios) / min(ratios) if ratios else math.nan,
        "hypothesis_failures": [r.hypothesis_failure for r in reps if r.hypothesis_failure],
    }
    return paths, summary


def _exec_check(cfg, out, jobs, plots, timings):
    """Run with every per-step invariant enforced, then audit the ledgers."""
    from .diagnostics import energy_balance
    from .io import write_table
    from .stepper import run

    t0 = time.perf_counter()
    traj = run(cfg.params, cfg.solver, cfg.grid)
    timings["run"] = time.perf_counter() - t0
    grid = cfg.grid
    lines = []
    defects = [abs(r.mass_defect) for r in traj.reports[1:]]
    corrected = [abs(r.mass_defect - r.boundary_reaction) for r in traj.reports[1:]]
    lines.append(("mass_ledger", max(defects, default=0.0), 1e-10))
    lines.append(("mass_ledger_with_boundary_reaction", max(corrected, default=0.0), 1e-10))
    lines.append(("min_dissipation", min([r.dissipation_integral for r in traj.reports], default=0.0), -1e-10))
    lines.append(("energy_balance_residual", abs(energy_balance(traj, cfg.params, cfg.solver)), math.nan))
    rows = [(i, v, tol) for i, (_, v, tol) in enumerate(lines)]
    paths = [write_table(os.path.join(out, "check.csv"), ("item", "value", "tolerance"), rows)]
    summary = {name: {"value": v, "tolerance": tol} for name, v, tol in lines}
    summary["items"] = [name for name, _, _ in lines]
    failed = []
    if lines[1][1] > 1e-10:
        failed.append("mass_ledger_with_boundary_reaction")
    if lines[2][1] < -1e-10:
        failed.append("min_dissipation")
    summary["mass_ledger_literal_passed"] = lines[0][1] <= 1e-10
    if failed:
        raise InvariantViolation(f"invariant check failed: {failed}")
    return paths, summary


class _PartialFailure(Exception):
    def __init__(self, paths, summary):
        super().__init__("partial result")
        self.paths = paths
        self.summary = summary


_RUNNERS = {
    "run": _exec_run,
    "mms": _exec_mms,
    "sweep-lambda": _exec_sweep,
    "contdep": _exec_contdep,
    "check": _exec_check,
}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def execute(cfg, out_dir=None, jobs=1, emit_plots=False):
    """Run the configured experiment; returns ``(exit_code, manifest)``."""
    out = out_dir or cfg.out_dir
    _prepare_out(out)
    timings = {}
    manifest = {
        "manifest_version": 1,
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "experiment": cfg.experiment,
        "config": cfg.document,
    }
    status, error = "ok", None
    start = time.perf_counter()
    paths, summary = [], {}
    try:
        paths, summary = _RUNNERS[cfg.experiment](cfg, out, jobs, emit_plots, timings)
    except _PartialFailure as exc:
        paths, summary, status, error = exc.paths, exc.summary, "solver", "partial result"
    except InvariantViolation as exc:
        status, error = "invariant", str(exc)
    except (NumericalError, DomainViolation) as exc:
        status, error = "solver", f"{type(exc).__name__}: {exc}"
        if getattr(exc, "step_index", None) is not None:
            error += f" (step {exc.step_index})"
    except (ConfigurationError, UnsupportedError) as exc:
        status, error = "config", str(exc)
    timings["total"] = time.perf_counter() - start
    manifest.update(
        status=status,
        error=error,
        outputs=sorted(os.path.relpath(p, out) for p in paths),
        summary=summary,
        timings=timings,
    )
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_CODES[status], manifest


def build_parser():
    parser = argparse.ArgumentParser(prog="dnch", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON configuration (or a manifest)")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--jobs", type=int, default=1, help="worker threads for multi-run studies")
        p.add_argument("--dump-every", type=int, default=None, help="field dump cadence in steps")
        p.add_argument("--emit-plots", action="store_true", help="write gnuplot scripts next to the CSVs")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CODES["config"]
    try:
        cfg = parse_config(text, experiment=args.command)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CODES["config"]
    if args.dump_every is not None:
        if args.dump_every < 0:
            print("configuration error: --dump-every must be >= 0", file=sys.stderr)
            return EXIT_CODES["config"]
        cfg.dump_every = args.dump_every
        cfg.document["output"]["dump_every"] = args.dump_every
    if args.jobs < 1:
        print("configuration error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CODES["config"]
    try:
        code, manifest = execute(cfg, args.out, args.jobs, args.emit_plots)
    except OSError as exc:
        print(f"error: output directory not writable: {exc}", file=sys.stderr)
        return EXIT_CODES["io"]
    if code:
        print(f"{manifest['status']} failure: {manifest['error']}", file=sys.stderr)
    else:
        print(json.dumps(_jsonable(manifest["summary"]), sort_keys=True))
    return code
