"""Cross-cutting verification: one named check per invariant, assembled
into a machine-readable report.

Thresholds live in ``thresholds.yaml`` next to this module and are loaded
once per run; the report is pure data and reproduces bit-exactly on
cached inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import yaml

from .fd import ValueField, residuals
from .mc import SnellIterate
from .model import SwitchingProblem
from .sde import PathEnsemble
from .strategy import (
    DppReport,
    check_dpp,
    extract_policy,
    random_strategy_profits,
    simulate_strategy,
    switch_statistics,
)
from .tree import OracleValue

__all__ = ["Check", "Report", "load_thresholds", "cross_check",
           "mirror_symmetry"]


def load_thresholds() -> dict:
    text = resources.files("switchbox").joinpath("thresholds.yaml").read_text()
    return yaml.safe_load(text)


@dataclass(frozen=True)
class Check:
    name: str
    status: str  # pass | fail | skip
    measured: float | None
    threshold: float | None
    provenance: str

    def to_dict(self):
        return {"name": self.name, "status": self.status,
                "measured": self.measured, "threshold": self.threshold,
                "provenance": self.provenance}


@dataclass
class Report:
    checks: list = field(default_factory=list)

    def add(self, name, ok, measured, threshold, provenance, skip=False):
        status = "skip" if skip else ("pass" if ok else "fail")
        self.checks.append(Check(name, status,
                                 None if measured is None else float(measured),
                                 None if threshold is None else float(threshold),
                                 provenance))

    @property
    def overall_pass(self):
        return all(c.status != "fail" for c in self.checks)

    def to_dict(self):
        return {"overall_pass": self.overall_pass,
                "checks": [c.to_dict() for c in self.checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _max_psi_integral(p: SwitchingProblem, e: PathEnsemble):
    """MC estimate (mean, SE) of the integrated largest absolute profit rate."""
    dt = e.dt
    tot = np.zeros(e.n_paths)
    for j in range(e.n_steps):
        x_cols = e.states[:, j, :].T
        best = None
        for i in range(1, p.m + 1):
            v = np.abs(np.broadcast_arrays(p.psi_at(i, e.times[j], x_cols),
                                           x_cols[0])[0])
            best = v if best is None else np.maximum(best, v)
        tot += best * dt
    return float(np.mean(tot)), float(np.std(tot, ddof=1) / np.sqrt(e.n_paths))


def mirror_symmetry(fd: ValueField, modes=(1, 2), tol: float | None = None
                    ) -> Check:
    """Largest violation of v_i(t, x) = v_j(t, -x) over all grid nodes.

    Applies to problems whose data is invariant under swapping the two
    modes and reflecting the state, e.g. antisymmetric profit rates with
    even coefficients and a symmetric flat cost.
    """
    th = load_thresholds()
    if tol is None:
        tol = 2.0 * th["fd_value_tol"]
    i, j = modes
    grid = fd.grid
    if grid.k != 1:
        raise ValueError("mirror symmetry check supports k = 1 only")
    vi = fd.v[i - 1]
    vj = fd.v[j - 1]
    lo, hi = grid.bounds[0]
    if abs(lo + hi) > 1e-12:
        raise ValueError("grid is not centred; reflection leaves the box")
    worst = float(np.max(np.abs(vi - vj[:, ::-1])))
    prov = f"fd[{fd.scheme},{grid.n_space}x{grid.n_time}] modes {i}<->{j}"
    return Check("mirror_symmetry", "pass" if worst <= tol else "fail",
                 worst, float(tol), prov)


def cross_check(p: SwitchingProblem, fd: ValueField, mc: SnellIterate,
                oracle: OracleValue | None = None,
                ensemble: PathEnsemble | None = None,
                mc_ensemble: PathEnsemble | None = None,
                n_random: int = 100, tail_traces: int | None = None,
                thresholds: dict | None = None) -> Report:
    """Run the full agreement/invariant suite on solved artifacts.

    ``ensemble`` must be independent of anything used to build the inputs;
    simulation-based checks are skipped without it.  Missing artifacts
    produce skipped checks, never failures.
    """
    th = thresholds or load_thresholds()
    rep = Report()
    i0 = p.initial_mode
    x0 = np.asarray(p.x0)
    fd_val = fd.at(i0, 0.0, x0)
    mc_val = mc.mean_at_start(i0)
    mc_se = mc.se_at_start(i0)
    se_mult = th["mc_se_mult"]
    prov_fd = f"fd[{fd.scheme},{fd.grid.n_space}x{fd.grid.n_time}]"
    prov_mc = f"mc[seed={mc.ensemble_seed},n={mc.n}]"

    # solver agreement at the start point
    tol = se_mult * mc_se + th["fd_value_tol"]
    rep.add("fd_vs_mc", abs(fd_val - mc_val) <= tol, abs(fd_val - mc_val),
            tol, f"{prov_fd} vs {prov_mc}")
    if oracle is not None:
        oracle_val = oracle.root(i0)
        rep.add("fd_vs_oracle", abs(fd_val - oracle_val) <= th["fd_value_tol"],
                abs(fd_val - oracle_val), th["fd_value_tol"],
                f"{prov_fd} vs oracle[{oracle.chain.n_levels}]")
        tol = se_mult * mc_se + th["mc_extra_tol"]
        rep.add("mc_vs_oracle", abs(mc_val - oracle_val) <= tol,
                abs(mc_val - oracle_val), tol,
                f"{prov_mc} vs oracle[{oracle.chain.n_levels}]")
    else:
        rep.add("fd_vs_oracle", True, None, None, "no oracle", skip=True)
        rep.add("mc_vs_oracle", True, None, None, "no oracle", skip=True)

    # obstacle inequality and complementarity residual sweeps
    res = residuals(fd, p)
    rep.add("obstacle_inequality",
            res.obstacle_min_slack >= -th["obstacle_tol"],
            res.obstacle_min_slack, -th["obstacle_tol"], prov_fd)
    rep.add("complementarity_residual", res.max_abs <= th["residual_max"],
            res.max_abs, th["residual_max"], prov_fd)

    # monotone Picard iterates (means nondecreasing within 2 SE). The
    # zeroth iterate stops accruing at zero payoff rather than paying a
    # switching cost, so it can sit above the limit when profit rates go
    # negative; the comparison therefore starts at the first iterate.
    pairs = [(h0, h1) for h0, h1 in zip(mc.history, mc.history[1:])
             if h0[0] >= 1]
    if pairs:
        worst = 0.0
        limit = 0.0
        for (n0, m0, s0), (n1, m1, s1) in pairs:
            for a, b, sa, sb in zip(m0, m1, s0, s1):
                worst = max(worst, a - b)
                limit = max(limit, se_mult * float(np.hypot(sa, sb)))
        rep.add("monotone_iterates", worst <= limit, worst, limit, prov_mc)
    else:
        rep.add("monotone_iterates", True, None, None,
                "fewer than two comparable iterates", skip=True)
    if len(mc.history) >= 2:
        rep.add("mc_converged", bool(mc.converged), float(mc.n), None, prov_mc)

    # uniform upper bound from the integrated best |psi|
    if mc_ensemble is not None:
        ub, ub_se = _max_psi_integral(p, mc_ensemble)
        bound = ub + se_mult * float(np.hypot(ub_se, mc_se))
        ok = all(mc.mean_at_start(i) <= bound for i in range(1, p.m + 1))
        rep.add("mc_upper_bound", ok,
                max(mc.mean_at_start(i) for i in range(1, p.m + 1)), bound,
                prov_mc)
    else:
        rep.add("mc_upper_bound", True, None, None, "no MC ensemble", skip=True)

    if ensemble is None:
        for name in ("strategy_optimality", "random_domination", "dpp_n1",
                     "dpp_n3", "switch_tail"):
            rep.add(name, True, None, None, "no independent ensemble", skip=True)
    else:
        prov_sim = f"simulation[seed={ensemble.seed},paths={ensemble.n_paths}]"
        policy = extract_policy(fd, p)
        traces, summary = simulate_strategy(
            policy, ensemble, p,
            max_truncated_fraction=th["truncated_fraction"])
        tol = se_mult * summary.standard_error + th["mc_extra_tol"]
        rep.add("strategy_optimality",
                abs(summary.mean_profit - fd_val) <= tol,
                abs(summary.mean_profit - fd_val), tol,
                f"{prov_sim} vs {prov_fd}")
        rand = random_strategy_profits(p, ensemble, n_strategies=n_random,
                                       seed=ensemble.seed + 1)
        margin = summary.mean_profit + se_mult * summary.standard_error
        rep.add("random_domination", bool(np.all(rand <= margin)),
                float(np.max(rand)), margin, prov_sim)
        for n in (1, 3):
            d = check_dpp(fd, p, ensemble, n, policy=policy)
            tol = se_mult * d.standard_error + th["fd_value_tol"] \
                + th["dpp_extra_tol"]
            rep.add(f"dpp_n{n}", abs(d.left - d.right) <= tol,
                    abs(d.left - d.right), tol, prov_sim)
        if len(traces) >= 10 ** 4:
            tail = switch_statistics(traces)
            rep.add("switch_tail", tail.ok, max(tail.n_times_p), tail.bound,
                    prov_sim)
        else:
            rep.add("switch_tail", True, None, None,
                    f"only {len(traces)} traces (< 10^4)", skip=True)

    # continuity probe: value shifts over one grid cell bounded by the
    # two-cell modulus
    ts = fd.grid.times()
    dxs = fd.grid.dx
    base = fd_val
    probe_ok = True
    worst = 0.0
    bound = 0.0
    for dim in range(p.k):
        step = np.zeros(p.k)
        step[dim] = dxs[dim]
        for sgn in (-1.0, 1.0):
            d1 = abs(fd.at(i0, 0.0, x0 + sgn * step) - base)
            d2 = abs(fd.at(i0, 0.0, x0 + 2 * sgn * step) - base)
            if d1 > d2 + th["continuity_slack"]:
                probe_ok = False
            worst = max(worst, d1)
            bound = max(bound, d2 + th["continuity_slack"])
    dtg = ts[1] - ts[0]
    d1 = abs(fd.at(i0, dtg, x0) - base)
    d2 = abs(fd.at(i0, 2 * dtg, x0) - base)
    if d1 > d2 + th["continuity_slack"]:
        probe_ok = False
    worst = max(worst, d1)
    bound = max(bound, d2 + th["continuity_slack"])
    rep.add("continuity_probe", probe_ok, worst, bound, prov_fd)

    return rep
