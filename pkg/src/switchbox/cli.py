"""Command line front end.

Subcommands: validate, solve-fd, solve-mc, oracle, simulate, verify,
compare.  Every JSON artifact embeds the problem hash, the resolved run
configuration and the package version, so a run is reproducible from its
own outputs.  Same seed and configuration give byte-identical reports.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .expressions import DomainError, ParseError
from .fd import FdError, StabilityError, grid_for_problem, residuals, solve_fd
from .mc import iterates_to_csv, solve_mc
from .model import ProblemError, load_problem, problem_hash, validate_problem
from .sde import ensemble_to_csv, simulate
from .strategy import (StrategyError, extract_policy, simulate_strategy,
                       switch_statistics, traces_to_csv)
from .tree import TreeError, build_chain, solve_dp, write_golden
from .verify import cross_check
from . import plots

__all__ = ["main", "run"]

# offset between the regression seed and the independent evaluation seed
SIM_SEED_OFFSET = 1000003


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="switchbox",
        description="solve and cross-check multi-mode switching problems")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help_text, **which):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("problem", help="problem file (.yaml, extension optional)")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        if which.get("grid"):
            sp.add_argument("--grid", default="200",
                            help="space nodes per axis: NX or NX,NY")
            sp.add_argument("--scheme", choices=["explicit", "implicit"],
                            default="implicit")
        if which.get("steps"):
            sp.add_argument("--steps", type=int, default=which["steps"],
                            help="time steps (or lattice levels for oracle)")
        if which.get("paths"):
            sp.add_argument("--paths", type=int, default=which["paths"])
        if which.get("tol"):
            sp.add_argument("--tol", type=float, default=which["tol"])
        if which.get("degree"):
            sp.add_argument("--degree", type=int, default=6)
        if which.get("mc_steps"):
            sp.add_argument("--mc-steps", type=int, default=200,
                            dest="mc_steps",
                            help="time steps for simulated path ensembles")
        return sp

    add("validate", "check problem structure and assumptions", paths=256)
    add("solve-fd", "finite difference solve", grid=True, steps=400,
        tol=1e-9)
    add("solve-mc", "regression Monte Carlo solve", steps=200, paths=50000,
        tol=1e-3, degree=True)
    add("oracle", "lattice dynamic programming reference (k = 1)", steps=2000)
    add("simulate", "extract and forward-simulate the policy", grid=True,
        steps=400, paths=10000, mc_steps=True)
    add("verify", "run the cross-check suite, report only", grid=True,
        steps=400, paths=10000, tol=1e-3, degree=True, mc_steps=True)
    add("compare", "full pipeline with all artifacts and figures", grid=True,
        steps=400, paths=10000, tol=1e-3, degree=True, mc_steps=True)
    return ap


def _resolve_problem(path):
    for cand in (path, path + ".yaml", path + ".yml"):
        if Path(cand).is_file():
            return Path(cand)
    raise FileNotFoundError(f"problem file not found: {path}")


def _parse_grid(text, k):
    parts = [int(s) for s in text.split(",")]
    if len(parts) == 1:
        parts = parts * k
    if len(parts) != k:
        raise ValueError(f"--grid needs 1 or {k} integers, got {text!r}")
    return tuple(parts)


def _run_config(args):
    skip = {"command", "problem", "func"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    cfg["command"] = args.command
    cfg["problem"] = str(args.problem)
    return cfg


def _write_artifact(outdir, name, p, args, payload):
    doc = {"problem": p.name, "problem_hash": problem_hash(p),
           "config": _run_config(args), "version": __version__}
    doc.update(payload)
    path = Path(outdir) / name
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def _prepare(args):
    p = load_problem(_resolve_problem(args.problem))
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    return p, outdir


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_validate(args):
    p, outdir = _prepare(args)
    report = validate_problem(p, samples=args.paths, seed=args.seed)
    _write_artifact(outdir, "validation.json", p, args,
                    {"validation": report.to_dict()})
    print(f"validation {'pass' if report.ok else 'fail'}: "
          f"{len(report.violations)} violation(s)")
    return 0 if report.ok else 1


def _solve_fd_for(p, args):
    grid = grid_for_problem(p, _parse_grid(args.grid, p.k), args.steps)
    return solve_fd(p, grid, scheme=args.scheme, tol_policy=getattr(
        args, "tol", 1e-9) if args.command == "solve-fd" else 1e-9)


def _cmd_solve_fd(args):
    p, outdir = _prepare(args)
    field = _solve_fd_for(p, args)
    res = residuals(field, p)
    field.to_csv(outdir / "value_fd.csv")
    field.save(outdir / "value_fd.npz")
    start = {str(i): field.at(i, 0.0, np.asarray(p.x0))
             for i in range(1, p.m + 1)}
    payload = {"scheme": field.scheme, "value_at_start": start,
               "residual_max": res.max_abs,
               "obstacle_min_slack": res.obstacle_min_slack}
    _write_artifact(outdir, "fd.json", p, args, payload)
    print(f"fd value at start (mode {p.initial_mode}): "
          f"{start[str(p.initial_mode)]!r}")
    return 0


def _cmd_solve_mc(args):
    p, outdir = _prepare(args)
    e = simulate(p, 0.0, p.x0, args.paths, args.steps, args.seed)
    it = solve_mc(p, e, tol=args.tol, n_max=20, degree=args.degree)
    iterates_to_csv(it, outdir / "mc_iterates.csv")
    payload = {"converged": bool(it.converged), "iterations": it.n,
               "mean_value_at_start": {
                   str(i): it.mean_at_start(i) for i in range(1, p.m + 1)},
               "standard_error_at_start": {
                   str(i): it.se_at_start(i) for i in range(1, p.m + 1)}}
    _write_artifact(outdir, "mc.json", p, args, payload)
    mode = p.initial_mode
    print(f"mc value at start (mode {mode}): {it.mean_at_start(mode)!r} "
          f"+/- {it.se_at_start(mode)!r}, converged={it.converged}")
    return 0 if it.converged else 1


def _cmd_oracle(args):
    p, outdir = _prepare(args)
    chain = build_chain(p, args.steps)
    oracle = solve_dp(chain, p)
    write_golden(outdir / "oracle.txt", oracle)
    payload = {"n_levels": args.steps,
               "root_value": {str(i): oracle.root(i)
                              for i in range(1, p.m + 1)}}
    _write_artifact(outdir, "oracle.json", p, args, payload)
    print(f"oracle value at start (mode {p.initial_mode}): "
          f"{oracle.root(p.initial_mode)!r}")
    return 0


def _cmd_simulate(args):
    p, outdir = _prepare(args)
    field = _solve_fd_for(p, args)
    policy = extract_policy(field, p)
    e = simulate(p, 0.0, p.x0, args.paths, args.mc_steps,
                 args.seed + SIM_SEED_OFFSET)
    traces, summary = simulate_strategy(policy, e, p)
    traces_to_csv(traces, outdir / "traces.csv")
    payload = {"summary": summary.to_dict()}
    if len(traces) >= 10 ** 4:
        tail = switch_statistics(traces)
        payload["switch_tail"] = tail.to_dict()
        plots.tail_figure(tail, outdir / "switch_tail.png")
    _write_artifact(outdir, "simulate.json", p, args, payload)
    print(f"mean profit {summary.mean_profit!r} +/- "
          f"{summary.standard_error!r} over {summary.n_paths} paths, "
          f"mean switches {summary.mean_switches!r}")
    return 0


def _pipeline(args, outdir, p, figures):
    """Shared verify/compare pipeline; returns the cross-check report."""
    field = _solve_fd_for(p, args)
    e_mc = simulate(p, 0.0, p.x0, args.paths, args.mc_steps, args.seed)
    it = solve_mc(p, e_mc, tol=args.tol, n_max=20, degree=args.degree)
    oracle = None
    try:
        oracle = solve_dp(build_chain(p, 2000), p)
    except TreeError:
        pass
    e_sim = simulate(p, 0.0, p.x0, args.paths, args.mc_steps,
                     args.seed + SIM_SEED_OFFSET)
    rep = cross_check(p, field, it, oracle=oracle, ensemble=e_sim,
                      mc_ensemble=e_mc)
    if figures:
        field.to_csv(outdir / "value_fd.csv")
        iterates_to_csv(it, outdir / "mc_iterates.csv")
        if oracle is not None:
            write_golden(outdir / "oracle.txt", oracle)
        policy = extract_policy(field, p)
        traces, _ = simulate_strategy(policy, e_sim, p)
        traces_to_csv(traces, outdir / "traces.csv")
        plots.value_figure(field, p, outdir / "value.png")
        plots.iterates_figure(it, outdir / "mc_iterates.png")
        if len(traces) >= 10 ** 4:
            plots.tail_figure(switch_statistics(traces),
                              outdir / "switch_tail.png")
    return rep, field, it, oracle


def _report_exit(rep, outdir, p, args):
    payload = rep.to_dict()
    _write_artifact(outdir, "report.json", p, args, payload)
    for c in rep.checks:
        print(f"check {c.name}: {c.status} (measured={c.measured!r}, "
              f"threshold={c.threshold!r})")
    print(f"overall: {'pass' if rep.overall_pass else 'fail'}")
    return 0 if rep.overall_pass else 1


def _cmd_verify(args):
    p, outdir = _prepare(args)
    rep, _, _, _ = _pipeline(args, outdir, p, figures=False)
    return _report_exit(rep, outdir, p, args)


def _cmd_compare(args):
    p, outdir = _prepare(args)
    rep, _, _, _ = _pipeline(args, outdir, p, figures=True)
    return _report_exit(rep, outdir, p, args)


_COMMANDS = {
    "validate": _cmd_validate,
    "solve-fd": _cmd_solve_fd,
    "solve-mc": _cmd_solve_mc,
    "oracle": _cmd_oracle,
    "simulate": _cmd_simulate,
    "verify": _cmd_verify,
    "compare": _cmd_compare,
}

_KNOWN_ERRORS = (ProblemError, ParseError, DomainError, FdError,
                 StabilityError, TreeError, StrategyError,
                 FileNotFoundError, ValueError)


def run(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _KNOWN_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
