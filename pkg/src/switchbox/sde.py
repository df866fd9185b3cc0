"""Euler-Maruyama simulation of the driving diffusion.

Gaussian increments come from a counter-based generator (Philox) keyed by
(seed, path), so any single path can be regenerated in isolation and the
ensemble is bit-identical regardless of how path generation is chunked
across threads.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .expressions import DomainError
from .model import SwitchingProblem

__all__ = [
    "PathEnsemble",
    "SimulationError",
    "simulate",
    "path_increments",
    "moment_check",
    "MomentReport",
    "ensemble_to_csv",
]


class SimulationError(Exception):
    """Coefficient evaluation failed at a visited state."""


def thread_count() -> int:
    """Parallelism cap from SWITCHBOX_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("SWITCHBOX_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class PathEnsemble:
    """Seeded batch of diffusion trajectories on a uniform grid.

    ``states`` has shape (n_paths, n_steps + 1, k); ``times`` runs from the
    start time to the horizon.  Before the start time the process is frozen
    at the initial state by convention.
    """

    times: np.ndarray
    states: np.ndarray
    seed: int
    scheme: str = "euler"

    @property
    def n_paths(self):
        return self.states.shape[0]

    @property
    def n_steps(self):
        return self.states.shape[1] - 1

    @property
    def k(self):
        return self.states.shape[2]

    @property
    def t0(self):
        return float(self.times[0])

    @property
    def dt(self):
        return float(self.times[1] - self.times[0])


def path_increments(seed: int, path: int, n_steps: int, d: int) -> np.ndarray:
    """Standard-normal increments of one path, reproducible in isolation."""
    bitgen = np.random.Philox(key=np.array([seed, path], dtype=np.uint64))
    return np.random.Generator(bitgen).standard_normal((n_steps, d))


def _increment_block(seed, paths, n_steps, d):
    out = np.empty((len(paths), n_steps, d))
    for row, path in enumerate(paths):
        out[row] = path_increments(seed, path, n_steps, d)
    return out


def gaussian_increments(seed: int, n_paths: int, n_steps: int, d: int) -> np.ndarray:
    """All increments, shape (n_paths, n_steps, d), assembled in path order."""
    workers = thread_count()
    if workers == 1 or n_paths < 2 * workers:
        return _increment_block(seed, range(n_paths), n_steps, d)
    chunks = np.array_split(np.arange(n_paths), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        blocks = list(pool.map(
            lambda idx: _increment_block(seed, idx, n_steps, d), chunks))
    return np.concatenate(blocks, axis=0)


def simulate(p: SwitchingProblem, t0: float, x0, n_paths: int, n_steps: int,
             seed: int) -> PathEnsemble:
    """Euler-Maruyama paths of the state process from (t0, x0) to T."""
    if not (0.0 <= t0 < p.T):
        raise ValueError("t0 must lie in [0, T)")
    if n_paths < 1 or n_steps < 1:
        raise ValueError("n_paths and n_steps must be >= 1")
    k, d = p.diffusion.k, p.diffusion.d
    x0 = np.asarray(x0, dtype=float).reshape(k)
    times = np.linspace(t0, p.T, n_steps + 1)
    dt = (p.T - t0) / n_steps
    sqdt = np.sqrt(dt)

    dW = gaussian_increments(seed, n_paths, n_steps, d)
    states = np.empty((n_paths, n_steps + 1, k))
    states[:, 0, :] = x0

    x = np.broadcast_to(x0[:, None], (k, n_paths)).copy()  # (k, n_paths)
    for j in range(n_steps):
        t = times[j]
        try:
            drift = p.diffusion.drift_at(t, x)  # (k, n_paths)
            vol = p.diffusion.vol_at(t, x)  # (k, d, n_paths)
        except DomainError as exc:
            raise SimulationError(f"coefficient failure at step {j}: {exc}") from exc
        x = x + drift * dt + sqdt * np.einsum("idp,pd->ip", vol, dW[:, j, :])
        states[:, j + 1, :] = x.T

    return PathEnsemble(times=times, states=states, seed=seed)


# ---------------------------------------------------------------------------
# Moment diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentReport:
    q: int
    estimate: float  # empirical E[sup_s |X_s|^q]
    standard_error: float
    implied_c: float  # estimate / (1 + |x0|^q)
    continuity: float | None = None  # E[sup_s |X_s - X'_s|^2] vs a second ensemble

    def to_dict(self):
        out = {
            "q": self.q,
            "estimate": self.estimate,
            "standard_error": self.standard_error,
            "implied_c": self.implied_c,
        }
        if self.continuity is not None:
            out["continuity"] = self.continuity
        return out


def moment_check(e: PathEnsemble, q: int, other: PathEnsemble | None = None
                 ) -> MomentReport:
    """Estimate E[sup_s |X_s|^q] and the implied growth constant.

    With a second ensemble, also estimates the mean-square modulus
    E[sup_s |X_s - X'_s|^2] between the two (paths paired by index).
    """
    if q not in (2, 4, 8):
        raise ValueError("q must be one of 2, 4, 8")
    norms = np.sqrt(np.sum(e.states ** 2, axis=2))  # (paths, steps+1)
    sup_q = np.max(norms, axis=1) ** q
    est = float(np.mean(sup_q))
    se = float(np.std(sup_q, ddof=1) / np.sqrt(e.n_paths)) if e.n_paths > 1 else 0.0
    x0 = e.states[0, 0]
    implied = est / (1.0 + float(np.sum(x0 ** 2)) ** (q / 2))

    continuity = None
    if other is not None:
        n = min(e.n_paths, other.n_paths)
        diff = e.states[:n] - other.states[:n]
        continuity = float(np.mean(np.max(np.sum(diff ** 2, axis=2), axis=1)))

    return MomentReport(q=q, estimate=est, standard_error=se,
                        implied_c=implied, continuity=continuity)


def ensemble_to_csv(e: PathEnsemble, path) -> None:
    """One row per (path, step) with the time and state columns."""
    k = e.k
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "step", "time"] + [f"x{i + 1}" for i in range(k)])
        for pth in range(e.n_paths):
            for step in range(e.n_steps + 1):
                writer.writerow(
                    [pth, step, repr(float(e.times[step]))]
                    + [repr(float(v)) for v in e.states[pth, step]])
