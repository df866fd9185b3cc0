"""Exact discrete-time dynamic programming on a recombining trinomial
chain (k = 1 only).

This is the brute-force reference: backward induction over the lattice
with the mode switch resolved to a fixed point at each level, used to
produce golden values for the other solvers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SwitchingProblem, problem_hash

__all__ = [
    "ChainApprox",
    "OracleValue",
    "TreeError",
    "build_chain",
    "solve_dp",
    "solve_stopping",
    "write_golden",
    "read_golden",
]


class TreeError(Exception):
    pass


@dataclass(frozen=True)
class ChainApprox:
    """Recombining lattice with local-moment-matched trinomial branching.

    Level l (0-based) holds 2l + 1 nodes at x0 + j*dx for j in [-l, l].
    ``probs(level)`` returns the (up, mid, down) probabilities at each node
    of that level, matched to E[dX] = b dt and Var[dX] = sigma sigma^T dt.
    """

    x0: float
    dx: float
    dt: float
    n_levels: int
    problem: SwitchingProblem

    def nodes(self, level: int) -> np.ndarray:
        return self.x0 + self.dx * np.arange(-level, level + 1)

    def probs(self, level: int):
        t = level * self.dt
        x = self.nodes(level)[None, :]
        b = float_array(self.problem.diffusion.drift_at(t, x)[0], x.shape[1])
        var = float_array(self.problem.diffusion.covariance_at(t, x)[0, 0],
                          x.shape[1])
        if self.dx == 0.0:
            if np.any(var > 0) or np.any(b != 0):
                raise TreeError("degenerate lattice (dx = 0) requires b = sigma = 0")
            z = np.zeros(x.shape[1])
            return z, np.ones(x.shape[1]), z
        mu = b * self.dt / self.dx
        s2 = (var * self.dt + (b * self.dt) ** 2) / self.dx ** 2
        pu = 0.5 * (s2 + mu)
        pd = 0.5 * (s2 - mu)
        pm = 1.0 - pu - pd
        bad = (pu < -1e-12) | (pd < -1e-12) | (pm < -1e-12)
        if np.any(bad):
            j = int(np.flatnonzero(bad)[0])
            raise TreeError(
                f"moment matching infeasible at level {level}, node x = "
                f"{self.nodes(level)[j]:.6g}: (pu, pm, pd) = "
                f"({pu[j]:.4g}, {pm[j]:.4g}, {pd[j]:.4g})")
        return np.clip(pu, 0, 1), np.clip(pm, 0, 1), np.clip(pd, 0, 1)


def float_array(v, n):
    return np.broadcast_to(np.asarray(v, dtype=float), (n,)).copy()


def build_chain(p: SwitchingProblem, n_levels: int,
                sigma_ref: float | None = None) -> ChainApprox:
    """Trinomial lattice with spacing dx = sigma_ref sqrt(3 dt).

    ``sigma_ref`` defaults to the largest |sigma(t, x0)| over the time
    grid; pass it explicitly when the volatility varies strongly in space.
    Probabilities are validated lazily per level; infeasible moment
    matching raises rather than clipping.
    """
    if p.k != 1:
        raise TreeError("the chain oracle supports k = 1 only")
    if n_levels < 1:
        raise TreeError("n_levels must be >= 1")
    dt = p.T / n_levels
    x0 = float(p.x0[0])
    if sigma_ref is None:
        ts = np.linspace(0.0, p.T, n_levels + 1)
        x = np.full((1, ts.size), x0)
        cov = p.diffusion.covariance_at(ts, x)[0, 0]
        sigma_ref = float(np.sqrt(np.max(cov)))
    dx = sigma_ref * np.sqrt(3.0 * dt)
    chain = ChainApprox(x0=x0, dx=dx, dt=dt, n_levels=n_levels, problem=p)
    chain.probs(0)  # fail fast at the root
    return chain


@dataclass(frozen=True)
class OracleValue:
    """Backward-induction values and argmax actions on the lattice.

    ``w[i]`` is a list of per-level arrays; ``action[i][level]`` holds 0
    for continue and the 1-based target mode for switch.
    """

    w: dict  # mode -> list of arrays
    action: dict  # mode -> list of int arrays
    chain: ChainApprox
    problem_id: str

    def root(self, mode: int) -> float:
        return float(self.w[mode][0][0])


def _switch_fixed_point(p, t, x, w_rows, action_rows):
    """Resolve same-level switching to its fixed point (at most m-1 passes
    make progress because each chained switch costs at least alpha)."""
    m = p.m
    costs = {}
    for i in range(1, m + 1):
        for j in p.other_modes(i):
            costs[(i, j)] = float_array(p.cost_at(i, j, t, x[None, :]), x.size)
    for _ in range(m):
        changed = False
        for i in range(1, m + 1):
            for j in p.other_modes(i):
                cand = -costs[(i, j)] + w_rows[j]
                better = cand > w_rows[i]
                if np.any(better):
                    w_rows[i][better] = cand[better]
                    action_rows[i][better] = j
                    changed = True
        if not changed:
            return
    raise TreeError("same-level switch resolution did not terminate in m passes; "
                    "check that every switching cost respects the floor alpha")


def solve_dp(chain: ChainApprox, p: SwitchingProblem) -> OracleValue:
    """Exact backward induction with same-level switch resolution."""
    L = chain.n_levels
    w = {i: [None] * (L + 1) for i in range(1, p.m + 1)}
    action = {i: [None] * (L + 1) for i in range(1, p.m + 1)}
    for i in w:
        w[i][L] = np.zeros(2 * L + 1)
        action[i][L] = np.zeros(2 * L + 1, dtype=np.int64)

    for level in range(L - 1, -1, -1):
        x = chain.nodes(level)
        t = level * chain.dt
        pu, pm, pd = chain.probs(level)
        rows = {}
        acts = {}
        for i in range(1, p.m + 1):
            nxt = w[i][level + 1]
            cont = pu * nxt[2:] + pm * nxt[1:-1] + pd * nxt[:-2]
            psi = float_array(p.psi_at(i, t, x[None, :]), x.size)
            rows[i] = psi * chain.dt + cont
            acts[i] = np.zeros(x.size, dtype=np.int64)
        _switch_fixed_point(p, t, x, rows, acts)
        for i in range(1, p.m + 1):
            w[i][level] = rows[i]
            action[i][level] = acts[i]

    return OracleValue(w=w, action=action, chain=chain, problem_id=problem_hash(p))


def solve_stopping(chain: ChainApprox, p: SwitchingProblem, mode: int) -> float:
    """Root value of the single-mode stopping problem: collect mode's profit
    rate until a chosen stop time (stopping pays nothing).  Reference for
    the Monte Carlo stage-0 iterate."""
    L = chain.n_levels
    w = np.zeros(2 * L + 1)
    for level in range(L - 1, -1, -1):
        x = chain.nodes(level)
        t = level * chain.dt
        pu, pm, pd = chain.probs(level)
        cont = pu * w[2:] + pm * w[1:-1] + pd * w[:-2]
        psi = float_array(p.psi_at(mode, t, x[None, :]), x.size)
        w = np.maximum(0.0, psi * chain.dt + cont)
    return float(w[0])


# ---------------------------------------------------------------------------
# Golden files
# ---------------------------------------------------------------------------

def write_golden(path, oracle: OracleValue) -> None:
    """Plain-text reference record: problem hash, levels, root values."""
    lines = [f"problem {oracle.problem_id}",
             f"n_levels {oracle.chain.n_levels}"]
    for i in sorted(oracle.w):
        lines.append(f"root_value mode={i} {oracle.root(i):.6f}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_golden(path) -> dict:
    out = {"roots": {}}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "problem":
                out["problem"] = parts[1]
            elif parts[0] == "n_levels":
                out["n_levels"] = int(parts[1])
            elif parts[0] == "root_value":
                mode = int(parts[1].split("=")[1])
                out["roots"][mode] = float(parts[2])
    return out
