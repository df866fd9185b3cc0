"""Switching-problem instances: construction, file loading, validation.

A problem bundles the diffusion coefficients, per-mode profit rates, the
pairwise switching costs with their strictly positive floor, the horizon
and the starting point.  All coefficient functions are expression trees
from :mod:`switchbox.expressions`.

Problem files are YAML; see ``load_problem`` for the field names.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
import yaml
from scipy.stats import qmc

from .expressions import (
    CoeffExpr,
    eval_expr,
    max_state_index,
    parse_expr,
    references_time,
    to_source,
)

__all__ = [
    "ProblemError",
    "DiffusionSpec",
    "SwitchingProblem",
    "ValidationReport",
    "Violation",
    "validate_problem",
    "load_problem",
    "problem_from_dict",
    "problem_hash",
]


class ProblemError(Exception):
    """Structurally invalid problem (wrong shapes, m < 2, diagonal costs)."""


@dataclass(frozen=True)
class DiffusionSpec:
    """Drift/volatility pair for a k-dimensional diffusion driven by a
    d-dimensional Brownian motion."""

    k: int
    d: int
    b: tuple  # k expressions
    sigma: tuple  # k rows of d expressions

    def __post_init__(self):
        if self.k < 1 or self.d < 1:
            raise ProblemError("dimensions k and d must be positive")
        if len(self.b) != self.k:
            raise ProblemError(f"drift must have {self.k} components")
        if len(self.sigma) != self.k or any(len(row) != self.d for row in self.sigma):
            raise ProblemError(f"volatility must be a {self.k}x{self.d} matrix")
        for e in self.all_exprs():
            if max_state_index(e) > self.k:
                raise ProblemError(
                    f"'{to_source(e)}' references a state beyond dimension {self.k}")

    def all_exprs(self):
        return list(self.b) + [e for row in self.sigma for e in row]

    def drift_at(self, t, x):
        """Drift vector, shape (k, *x-broadcast-shape)."""
        return np.array([np.broadcast_arrays(eval_expr(e, t, x), x[0])[0]
                         for e in self.b], dtype=float)

    def vol_at(self, t, x):
        """Volatility matrix, shape (k, d, *x-broadcast-shape)."""
        return np.array([[np.broadcast_arrays(eval_expr(e, t, x), x[0])[0]
                          for e in row] for row in self.sigma], dtype=float)

    def covariance_at(self, t, x):
        """sigma sigma^T, shape (k, k, *x-broadcast-shape)."""
        s = self.vol_at(t, x)
        return np.einsum("ip...,jp...->ij...", s, s)

    def is_time_dependent(self):
        return any(references_time(e) for e in self.all_exprs())


@dataclass(frozen=True)
class SwitchingProblem:
    """An m-mode switching problem on [0, T].

    ``psi[i]`` is the profit rate in mode i+1; ``g[i][j]`` the cost of
    switching from mode i+1 to mode j+1 (``None`` on the diagonal).  Modes
    are 1-based in the public API, matching the problem files.
    """

    m: int
    diffusion: DiffusionSpec
    psi: tuple
    g: tuple  # m x m, None on the diagonal
    alpha: float
    T: float
    x0: tuple
    initial_mode: int = 1
    growth_c: float = 10.0
    growth_gamma: float = 2.0
    linear_c: float = 10.0
    box: tuple = ()  # validation box, k rows of (lo, hi)
    name: str = ""

    def __post_init__(self):
        if self.m < 2:
            raise ProblemError("need at least two modes (the switch target set "
                               "of every mode must be nonempty)")
        if len(self.psi) != self.m:
            raise ProblemError(f"psi must have {self.m} entries")
        if len(self.g) != self.m or any(len(row) != self.m for row in self.g):
            raise ProblemError(f"g must be an {self.m}x{self.m} table")
        for i in range(self.m):
            if self.g[i][i] is not None:
                raise ProblemError(f"diagonal switching cost g[{i + 1}][{i + 1}] "
                                   "must be absent")
            for j in range(self.m):
                if i != j and self.g[i][j] is None:
                    raise ProblemError(f"missing switching cost g[{i + 1}][{j + 1}]")
        if not (self.alpha > 0):
            raise ProblemError("cost floor alpha must be strictly positive")
        if not (self.T > 0):
            raise ProblemError("horizon T must be positive")
        if len(self.x0) != self.diffusion.k:
            raise ProblemError(f"x0 must have dimension {self.diffusion.k}")
        if not (1 <= self.initial_mode <= self.m):
            raise ProblemError(f"initial_mode must be in 1..{self.m}")
        box = self.box if self.box else tuple(
            (x - 5.0, x + 5.0) for x in self.x0)
        object.__setattr__(self, "box", tuple(tuple(map(float, b)) for b in box))
        if len(self.box) != self.diffusion.k:
            raise ProblemError(f"validation box must have {self.diffusion.k} rows")
        for e in list(self.psi) + [c for row in self.g for c in row if c is not None]:
            if max_state_index(e) > self.diffusion.k:
                raise ProblemError(
                    f"'{to_source(e)}' references a state beyond dimension "
                    f"{self.diffusion.k}")

    @property
    def k(self):
        return self.diffusion.k

    def psi_at(self, i, t, x):
        """Profit rate of mode i (1-based)."""
        return eval_expr(self.psi[i - 1], t, x)

    def cost_at(self, i, j, t, x):
        """Switching cost i -> j (1-based, i != j)."""
        return eval_expr(self.g[i - 1][j - 1], t, x)

    def other_modes(self, i):
        return [j for j in range(1, self.m + 1) if j != i]


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    check: str
    witness: tuple  # (t, x...)
    detail: str


@dataclass
class ValidationReport:
    problem_name: str
    samples: int
    seed: int
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def to_dict(self):
        return {
            "problem": self.problem_name,
            "samples": self.samples,
            "seed": self.seed,
            "ok": self.ok,
            "violations": [
                {"check": v.check, "witness": list(v.witness), "detail": v.detail}
                for v in self.violations
            ],
        }


def validate_problem(p: SwitchingProblem, samples: int = 256,
                     seed: int = 0) -> ValidationReport:
    """Sample-check the analytic hypotheses on the declared box.

    Draws quasi-uniform points in [0, T] x box and checks the cost floor,
    the growth bounds and positive semidefiniteness of sigma sigma^T.
    Violations are collected with a witness point; structural defects were
    already rejected at construction time.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    k = p.k
    sampler = qmc.Halton(d=k + 1, scramble=True, seed=seed)
    u = sampler.random(samples)
    ts = u[:, 0] * p.T
    lo = np.array([b[0] for b in p.box])
    hi = np.array([b[1] for b in p.box])
    xs = lo + u[:, 1:] * (hi - lo)  # (samples, k)

    report = ValidationReport(p.name, samples, seed)

    def witness(idx):
        return (float(ts[idx]),) + tuple(float(v) for v in xs[idx])

    x_cols = xs.T  # (k, samples)
    norm_x = np.sqrt(np.sum(x_cols ** 2, axis=0))

    # cost floor g_ij >= alpha
    for i in range(1, p.m + 1):
        for j in p.other_modes(i):
            vals = np.broadcast_arrays(p.cost_at(i, j, ts, x_cols), ts)[0]
            bad = np.flatnonzero(vals < p.alpha)
            if bad.size:
                idx = int(bad[np.argmin(vals[bad])])
                report.violations.append(Violation(
                    "cost_floor", witness(idx),
                    f"g[{i}][{j}] = {vals[idx]:.6g} < alpha = {p.alpha:.6g}"))

    # polynomial growth of psi and g
    bound = p.growth_c * (1.0 + norm_x ** p.growth_gamma)
    for i in range(1, p.m + 1):
        tot = np.abs(np.broadcast_arrays(p.psi_at(i, ts, x_cols), ts)[0])
        for j in p.other_modes(i):
            tot = tot + np.abs(np.broadcast_arrays(p.cost_at(i, j, ts, x_cols), ts)[0])
        bad = np.flatnonzero(tot > bound)
        if bad.size:
            idx = int(bad[np.argmax(tot[bad] - bound[bad])])
            report.violations.append(Violation(
                "polynomial_growth", witness(idx),
                f"|psi_{i}| + sum |g_{i}j| = {tot[idx]:.6g} exceeds "
                f"C(1+|x|^gamma) = {bound[idx]:.6g}"))

    # linear growth of b and sigma
    drift = p.diffusion.drift_at(ts, x_cols)  # (k, samples)
    vol = p.diffusion.vol_at(ts, x_cols)  # (k, d, samples)
    mag = np.sqrt(np.sum(drift ** 2, axis=0)) + np.sqrt(np.sum(vol ** 2, axis=(0, 1)))
    lin_bound = p.linear_c * (1.0 + norm_x)
    bad = np.flatnonzero(mag > lin_bound)
    if bad.size:
        idx = int(bad[np.argmax(mag[bad] - lin_bound[bad])])
        report.violations.append(Violation(
            "linear_growth", witness(idx),
            f"|b| + |sigma| = {mag[idx]:.6g} exceeds C(1+|x|) = {lin_bound[idx]:.6g}"))

    # sigma sigma^T positive semidefinite
    cov = p.diffusion.covariance_at(ts, x_cols)  # (k, k, samples)
    eigs = np.linalg.eigvalsh(np.moveaxis(cov, -1, 0))
    bad = np.flatnonzero(eigs.min(axis=1) < -1e-10)
    if bad.size:
        idx = int(bad[0])
        report.violations.append(Violation(
            "psd", witness(idx),
            f"sigma sigma^T has eigenvalue {eigs[idx].min():.6g} < 0"))

    return report


# ---------------------------------------------------------------------------
# Problem files
# ---------------------------------------------------------------------------

def problem_from_dict(doc: dict, name: str = "") -> SwitchingProblem:
    """Build a problem from a parsed YAML document.

    Expected fields: ``dimension``, ``brownian_dimension`` (optional,
    defaults to ``dimension``), ``horizon``, ``drift`` (list of k
    expressions), ``sigma`` (k x d matrix of expressions), ``psi`` (list of
    m expressions), ``g`` (m x m table, ``null`` on the diagonal, or a
    single expression applied to every off-diagonal pair), ``alpha``,
    ``growth`` (``{c, gamma}``), ``linear_c``, ``box``, ``x0``,
    ``initial_mode``.
    """
    try:
        k = int(doc["dimension"])
        d = int(doc.get("brownian_dimension", k))
        T = float(doc["horizon"])
        drift = tuple(parse_expr(str(s)) for s in doc["drift"])
        sigma = tuple(tuple(parse_expr(str(s)) for s in row) for row in doc["sigma"])
        psi = tuple(parse_expr(str(s)) for s in doc["psi"])
        g_doc = doc["g"]
        m = len(psi)
        if isinstance(g_doc, (str, int, float)):
            gexpr = parse_expr(str(g_doc))
            g = tuple(tuple(None if i == j else gexpr for j in range(m))
                      for i in range(m))
        else:
            g = tuple(tuple(None if cell is None else parse_expr(str(cell))
                            for cell in row) for row in g_doc)
        alpha = float(doc["alpha"])
        growth = doc.get("growth", {})
        x0 = tuple(float(v) for v in doc["x0"])
    except KeyError as exc:
        raise ProblemError(f"problem file is missing field {exc}") from None

    return SwitchingProblem(
        m=m,
        diffusion=DiffusionSpec(k=k, d=d, b=drift, sigma=sigma),
        psi=psi,
        g=g,
        alpha=alpha,
        T=T,
        x0=x0,
        initial_mode=int(doc.get("initial_mode", 1)),
        growth_c=float(growth.get("c", 10.0)),
        growth_gamma=float(growth.get("gamma", 2.0)),
        linear_c=float(doc.get("linear_c", 10.0)),
        box=tuple(tuple(map(float, b)) for b in doc.get("box", [])),
        name=str(doc.get("name", name)),
    )


def load_problem(path) -> SwitchingProblem:
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ProblemError(f"{path}: problem file must be a mapping")
    return problem_from_dict(doc, name=str(path))


def _canonical(p: SwitchingProblem) -> dict:
    return {
        "m": p.m,
        "k": p.k,
        "d": p.diffusion.d,
        "T": p.T,
        "b": [to_source(e) for e in p.diffusion.b],
        "sigma": [[to_source(e) for e in row] for row in p.diffusion.sigma],
        "psi": [to_source(e) for e in p.psi],
        "g": [[None if c is None else to_source(c) for c in row] for row in p.g],
        "alpha": p.alpha,
        "x0": list(p.x0),
        "initial_mode": p.initial_mode,
    }


def problem_hash(p: SwitchingProblem) -> str:
    """Stable content hash of the mathematical problem (not its metadata)."""
    blob = json.dumps(_canonical(p), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
