"""Regression Monte Carlo for the switching value functions.

The stage-0 iterate is the optimal stopping of each mode's running profit
(profit until a chosen stop, nothing after).  Each further iterate allows
one more switch: stopping at an interior grid time pays the best
switch-into value of the previous iterate net of cost, stopping at the
horizon pays zero.  Continuation values are least-squares regressions of
the realized next-step value on polynomials of the current state
(Longstaff-Schwartz), so every iterate carries both pathwise realized
values (used for means and standard errors) and regression-smoothed
conditional values (used for decisions and as the next obstacle).
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .model import SwitchingProblem
from .sde import PathEnsemble

__all__ = [
    "SnellIterate",
    "snell_stage0",
    "picard_step",
    "solve_mc",
    "iterates_to_csv",
]


@dataclass(frozen=True)
class SnellIterate:
    """One iterate of the switch-count-limited value recursion.

    ``y[i]`` holds pathwise realized values of mode i+1 along the ensemble,
    shape (n_paths, n_steps + 1); ``fitted`` the regression estimates of
    the conditional values on the same layout.  Iterate n permits at most
    n switches.
    """

    n: int
    y: np.ndarray  # (m, n_paths, n_steps + 1)
    fitted: np.ndarray
    basis: str
    ensemble_seed: int
    converged: bool | None = None
    history: tuple = ()  # ((n, means, standard_errors), ...)

    @property
    def m(self):
        return self.y.shape[0]

    def mean_at_start(self, mode: int) -> float:
        return float(np.mean(self.y[mode - 1, :, 0]))

    def se_at_start(self, mode: int) -> float:
        col = self.y[mode - 1, :, 0]
        return float(np.std(col, ddof=1) / np.sqrt(col.size))


def _poly_basis(x, degree):
    """Monomials of total degree <= degree; x is (n_paths, k)."""
    n, k = x.shape
    cols = [np.ones(n)]
    if degree >= 1:
        powers = _total_degree_powers(k, degree)
        for pw in powers:
            col = np.ones(n)
            for dim, e in enumerate(pw):
                if e:
                    col = col * x[:, dim] ** e
            cols.append(col)
    return np.column_stack(cols)


def _total_degree_powers(k, degree):
    out = []

    def rec(prefix, remaining, dims_left):
        if dims_left == 1:
            for e in range(remaining + 1):
                out.append(prefix + (e,))
            return
        for e in range(remaining + 1):
            rec(prefix + (e,), remaining - e, dims_left - 1)

    rec((), degree, k)
    out = [pw for pw in out if 0 < sum(pw) <= degree]
    out.sort(key=lambda pw: (sum(pw), pw))
    return out


def _regress(x, target, degree):
    """Column-scaled OLS fit, falling back to a lower degree when the
    design matrix is rank deficient."""
    for deg in range(degree, -1, -1):
        basis = _poly_basis(x, deg)
        scale = np.maximum(np.max(np.abs(basis), axis=0), 1e-300)
        coef, _, rank, _ = np.linalg.lstsq(basis / scale, target, rcond=None)
        if rank == basis.shape[1] or deg == 0:
            if deg < degree:
                warnings.warn(
                    f"regression basis rank deficient; degree lowered to {deg}",
                    RuntimeWarning, stacklevel=3)
            return basis @ (coef / scale)
    raise AssertionError("unreachable")


def _psi_table(p, e):
    """psi_i(t_j, X_j) for all modes/paths/steps, shape (m, paths, steps+1)."""
    out = np.empty((p.m, e.n_paths, e.n_steps + 1))
    for j in range(e.n_steps + 1):
        x_cols = e.states[:, j, :].T  # (k, n_paths)
        for i in range(1, p.m + 1):
            out[i - 1, :, j] = np.broadcast_arrays(
                p.psi_at(i, e.times[j], x_cols), x_cols[0])[0]
    return out


def _backward_pass(p, e, stop_value, stop_realized, degree, basis_name, n,
                   psi=None):
    """Shared optimal-stopping recursion.

    ``stop_value(i, j, x_cols)`` returns the regression-smoothed payoff of
    stopping mode i at interior step j (an array over paths) or None when
    stopping is never worthwhile there; ``stop_realized`` the pathwise
    payoff actually booked on the stopped paths.
    """
    m = p.m
    K = e.n_steps
    dt = e.dt
    if psi is None:
        psi = _psi_table(p, e)
    y = np.zeros((m, e.n_paths, K + 1))
    fitted = np.zeros_like(y)

    for i in range(1, m + 1):
        realized = np.zeros(e.n_paths)  # value from s_{j+1} onward
        for j in range(K - 1, 0, -1):
            x = e.states[:, j, :]
            cont_realized = psi[i - 1, :, j] * dt + realized
            cont_fit = _regress(x, cont_realized, degree)
            sv = stop_value(i, j, x.T)
            if sv is None:
                realized = cont_realized
                fitted[i - 1, :, j] = cont_fit
            else:
                stop = sv >= cont_fit
                realized = np.where(stop, stop_realized(i, j, x.T, stop),
                                    cont_realized)
                fitted[i - 1, :, j] = np.maximum(sv, cont_fit)
            y[i - 1, :, j] = realized
        # all paths share x0 at the start: plain averages
        cont_realized = psi[i - 1, :, 0] * dt + realized
        cont_mean = float(np.mean(cont_realized))
        sv = stop_value(i, 0, e.states[:, 0, :].T)
        sv0 = None if sv is None else float(sv[0])
        if sv0 is None or sv0 < cont_mean:
            y[i - 1, :, 0] = cont_realized
            fitted[i - 1, :, 0] = cont_mean
        else:
            y[i - 1, :, 0] = stop_realized(i, 0, e.states[:, 0, :].T,
                                           np.ones(e.n_paths, dtype=bool))
            fitted[i - 1, :, 0] = sv0

    return SnellIterate(n=n, y=y, fitted=fitted, basis=basis_name,
                        ensemble_seed=e.seed)


def snell_stage0(e: PathEnsemble, p: SwitchingProblem,
                 degree: int = 4) -> SnellIterate:
    """Zero-switch iterate: optimal stopping of each mode's running profit."""

    def stop_value(i, j, x_cols):
        return np.zeros(x_cols.shape[1])

    def stop_realized(i, j, x_cols, stop):
        return 0.0

    return _backward_pass(p, e, stop_value, stop_realized, degree,
                          f"poly_deg{degree}", n=0)


def picard_step(prev: SnellIterate, e: PathEnsemble, p: SwitchingProblem,
                degree: int = 4) -> SnellIterate:
    """One more allowed switch on the same ensemble.

    Obstacles are evaluated from the previous iterate's regression-smoothed
    values (ties broken toward the smallest target mode); the value booked
    on a stopped path is the previous iterate's realized value of the
    chosen target, net of the switching cost along the path.
    """
    if prev.ensemble_seed != e.seed or prev.y.shape[1] != e.n_paths:
        raise ValueError("previous iterate was built on a different ensemble")

    def obstacle_parts(i, j, x_cols):
        t = e.times[j]
        parts = []
        for tgt in p.other_modes(i):
            c = np.broadcast_arrays(p.cost_at(i, tgt, t, x_cols), x_cols[0])[0]
            parts.append((-c + prev.fitted[tgt - 1, :, j],
                          -c + prev.y[tgt - 1, :, j], tgt))
        return parts

    part_cache = {}

    def get_parts(i, j, x_cols):
        key = (i, j)
        if key not in part_cache:
            part_cache[key] = obstacle_parts(i, j, x_cols)
        return part_cache[key]

    def stop_value(i, j, x_cols):
        parts = get_parts(i, j, x_cols)
        best = parts[0][0]
        for fit, _, _ in parts[1:]:
            best = np.maximum(best, fit)
        return best

    def stop_realized(i, j, x_cols, stop):
        parts = get_parts(i, j, x_cols)
        fits = np.stack([f for f, _, _ in parts])
        reals = np.stack([r for _, r, _ in parts])
        kstar = np.argmax(fits, axis=0)  # first maximum: smallest target wins
        out = reals[kstar, np.arange(reals.shape[1])]
        part_cache.pop((i, j), None)
        return out

    it = _backward_pass(p, e, stop_value, stop_realized, degree, prev.basis,
                        n=prev.n + 1)
    return it


def solve_mc(p: SwitchingProblem, e: PathEnsemble, tol: float = 1e-3,
             n_max: int = 20, degree: int = 4) -> SnellIterate:
    """Iterate the switch-count recursion until the start values are Cauchy.

    Returns the last iterate, flagged ``converged`` and carrying the full
    (n, means, standard errors) history.  Non-convergence within ``n_max``
    is reported through the flag, not an exception.
    """
    if tol <= 0 or n_max < 1:
        raise ValueError("tol must be positive and n_max >= 1")
    cur = snell_stage0(e, p, degree=degree)
    history = [(0, tuple(cur.mean_at_start(i) for i in range(1, p.m + 1)),
                tuple(cur.se_at_start(i) for i in range(1, p.m + 1)))]
    converged = False
    for n in range(1, n_max + 1):
        nxt = picard_step(cur, e, p, degree=degree)
        means = tuple(nxt.mean_at_start(i) for i in range(1, p.m + 1))
        ses = tuple(nxt.se_at_start(i) for i in range(1, p.m + 1))
        history.append((n, means, ses))
        delta = max(abs(a - b) for a, b in zip(means, history[-2][1]))
        cur = nxt
        if delta < tol:
            converged = True
            break
    return SnellIterate(n=cur.n, y=cur.y, fitted=cur.fitted, basis=cur.basis,
                        ensemble_seed=cur.ensemble_seed, converged=converged,
                        history=tuple(history))


def iterates_to_csv(it: SnellIterate, path) -> None:
    """History export: one row per (iteration, mode)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "mode", "mean_value_at_start", "standard_error"])
        for n, means, ses in it.history:
            for mode, (mu, se) in enumerate(zip(means, ses), start=1):
                w.writerow([n, mode, repr(mu), repr(se)])
