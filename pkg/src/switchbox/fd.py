"""Finite-difference solver for the coupled obstacle system in 1 or 2
space dimensions.

The backward sweep applies, per time level, an unconstrained explicit or
implicit step for every mode followed by the inter-connected obstacle
projection iterated to its fixed point.  The fixed point is reached
exactly (no node changes at all) after a few passes because every chained
switch costs at least the floor alpha, so the final field satisfies the
obstacle inequality by construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .model import SwitchingProblem, problem_hash

__all__ = [
    "Grid",
    "ValueField",
    "FdError",
    "StabilityError",
    "discretize_generator",
    "solve_fd",
    "residuals",
    "ResidualReport",
    "grid_for_problem",
]


class FdError(Exception):
    pass


class StabilityError(FdError):
    pass


@dataclass(frozen=True)
class Grid:
    """Truncated space-time box: per-dimension bounds and node counts."""

    bounds: tuple  # k rows of (lo, hi)
    n_space: tuple  # k node counts
    n_time: int
    horizon: float

    def __post_init__(self):
        if len(self.bounds) != len(self.n_space):
            raise FdError("bounds and n_space must have equal length")
        if len(self.bounds) not in (1, 2):
            raise FdError("grids support k in {1, 2}")
        if any(n < 3 for n in self.n_space) or self.n_time < 1:
            raise FdError("need at least 3 space nodes per dimension and 1 time step")
        if any(hi <= lo for lo, hi in self.bounds):
            raise FdError("each bound must satisfy lo < hi")

    @property
    def k(self):
        return len(self.bounds)

    @property
    def dt(self):
        return self.horizon / self.n_time

    @property
    def dx(self):
        return tuple((hi - lo) / (n - 1) for (lo, hi), n in
                     zip(self.bounds, self.n_space))

    @property
    def shape(self):
        return tuple(self.n_space)

    @property
    def n_nodes(self):
        return int(np.prod(self.n_space))

    def axes(self):
        return [np.linspace(lo, hi, n) for (lo, hi), n in
                zip(self.bounds, self.n_space)]

    def node_coords(self):
        """Flattened node coordinates, shape (k, n_nodes), C order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh])

    def times(self):
        return np.linspace(0.0, self.horizon, self.n_time + 1)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return all(lo < xi < hi for (lo, hi), xi in zip(self.bounds, x))

    def nearest_index(self, x):
        """Nearest flattened node index to the point x (clipped to the box)."""
        idx = []
        for (lo, hi), n, xi in zip(self.bounds, self.n_space, np.atleast_1d(x)):
            h = (hi - lo) / (n - 1)
            idx.append(int(np.clip(round((xi - lo) / h), 0, n - 1)))
        return int(np.ravel_multi_index(tuple(idx), self.shape))

    def interior_mask(self):
        """Boolean mask over flattened nodes, False on every face."""
        mask = np.ones(self.shape, dtype=bool)
        for axis in range(self.k):
            sl = [slice(None)] * self.k
            sl[axis] = 0
            mask[tuple(sl)] = False
            sl[axis] = -1
            mask[tuple(sl)] = False
        return mask.ravel()


def grid_for_problem(p: SwitchingProblem, n_space, n_time, n_std: float = 4.0
                     ) -> Grid:
    """Box centred on x0 sized by the diffusion scale over the horizon.

    Each face is placed ``n_std`` standard deviations of the driving noise
    (plus the drift excursion) away from x0, so values near the centre are
    insensitive to the artificial boundary condition.
    """
    x0 = np.asarray(p.x0, dtype=float)
    cov = p.diffusion.covariance_at(0.0, x0[:, None])[..., 0]
    drift = p.diffusion.drift_at(0.0, x0[:, None])[:, 0]
    scale = np.sqrt(np.maximum(np.diag(cov), 1e-12) * p.T)
    half = n_std * scale + np.abs(drift) * p.T + 1e-6
    bounds = tuple((float(x0[i] - half[i]), float(x0[i] + half[i]))
                   for i in range(p.k))
    n_space = (n_space,) * p.k if np.isscalar(n_space) else tuple(n_space)
    return Grid(bounds=bounds, n_space=n_space, n_time=int(n_time), horizon=p.T)


# ---------------------------------------------------------------------------
# Generator discretization
# ---------------------------------------------------------------------------

def _drift_rows(n, dx, b):
    """Upwinded first-derivative coefficients along one axis.

    Returns (sub, diag, sup, lo_extra, hi_extra): tridiagonal bands plus the
    second-order one-sided third-point weights used at the two faces.
    """
    sub = np.zeros(n)
    diag = np.zeros(n)
    sup = np.zeros(n)
    pos = b > 0
    neg = b < 0
    # interior upwind: forward for b > 0, backward for b < 0
    sup[pos] = b[pos] / dx
    diag[pos] -= b[pos] / dx
    diag[neg] += b[neg] / dx
    sub[neg] = -b[neg] / dx
    # one-sided second-order rows at the faces
    diag[0] = -3.0 * b[0] / (2 * dx)
    sup[0] = 4.0 * b[0] / (2 * dx)
    lo_extra = -b[0] / (2 * dx)
    diag[-1] = 3.0 * b[-1] / (2 * dx)
    sub[-1] = -4.0 * b[-1] / (2 * dx)
    hi_extra = b[-1] / (2 * dx)
    return sub, diag, sup, lo_extra, hi_extra


def discretize_generator(p: SwitchingProblem, grid: Grid, t: float):
    """Sparse matrix of the generator at time t over the flattened grid.

    Diffusion terms use second-order central differences and first-order
    upwind drift (direction chosen per node by the drift sign); the
    cross-derivative term (k = 2) uses the standard 4-point stencil.
    Boundary rows impose a zero second derivative and a one-sided
    second-order drift difference.  Aborts when sigma sigma^T fails to be
    positive semidefinite at some node.
    """
    coords = grid.node_coords()
    cov = p.diffusion.covariance_at(t, coords)  # (k, k, n_nodes)
    drift = p.diffusion.drift_at(t, coords)  # (k, n_nodes)

    if grid.k == 1:
        a = 0.5 * cov[0, 0]
        if np.any(cov[0, 0] < -1e-12):
            node = int(np.argmin(cov[0, 0]))
            raise FdError(f"sigma sigma^T negative at node {node} "
                          f"(x = {coords[0, node]:.6g})")
        n = grid.n_space[0]
        dx = grid.dx[0]
        sub = np.zeros(n)
        diag = np.zeros(n)
        sup = np.zeros(n)
        # diffusion on interior nodes only (zero second derivative at faces)
        sub[1:-1] = a[1:-1] / dx ** 2
        sup[1:-1] = a[1:-1] / dx ** 2
        diag[1:-1] = -2.0 * a[1:-1] / dx ** 2
        dsub, ddiag, dsup, lo3, hi3 = _drift_rows(n, dx, drift[0])
        A = sp.diags([sub[1:] + dsub[1:], diag + ddiag, sup[:-1] + dsup[:-1]],
                     offsets=[-1, 0, 1], format="lil")
        A[0, 2] += lo3
        A[n - 1, n - 3] += hi3
        return A.tocsr()

    # k == 2
    nx, ny = grid.n_space
    dx, dy = grid.dx
    a11 = 0.5 * cov[0, 0].reshape(nx, ny)
    a22 = 0.5 * cov[1, 1].reshape(nx, ny)
    a12 = 0.5 * cov[0, 1].reshape(nx, ny)
    det = cov[0, 0] * cov[1, 1] - cov[0, 1] ** 2
    bad = (cov[0, 0] < -1e-12) | (cov[1, 1] < -1e-12) | (det < -1e-10)
    if np.any(bad):
        node = int(np.flatnonzero(bad)[0])
        raise FdError(f"sigma sigma^T not PSD at node {node} "
                      f"(x = {tuple(coords[:, node])})")
    dom = np.abs(a12[1:-1, 1:-1]) / (dx * dy) > np.minimum(
        a11[1:-1, 1:-1] / dx ** 2, a22[1:-1, 1:-1] / dy ** 2) + 1e-14
    if np.any(dom):
        warnings.warn("cross-derivative coefficient exceeds the diagonal "
                      "dominance bound; the 4-point stencil is not monotone "
                      "there", RuntimeWarning, stacklevel=2)

    b1 = drift[0].reshape(nx, ny)
    b2 = drift[1].reshape(nx, ny)
    rows, cols, vals = [], [], []
    flat = np.arange(nx * ny).reshape(nx, ny)

    def add(r, c, v):
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(np.broadcast_to(v, r.shape).ravel())

    ii = flat[1:-1, :]
    add(ii, flat[2:, :], a11[1:-1, :] / dx ** 2)
    add(ii, flat[:-2, :], a11[1:-1, :] / dx ** 2)
    add(ii, ii, -2.0 * a11[1:-1, :] / dx ** 2)
    jj = flat[:, 1:-1]
    add(jj, flat[:, 2:], a22[:, 1:-1] / dy ** 2)
    add(jj, flat[:, :-2], a22[:, 1:-1] / dy ** 2)
    add(jj, jj, -2.0 * a22[:, 1:-1] / dy ** 2)
    # cross term, interior in both dimensions
    cc = flat[1:-1, 1:-1]
    w = a12[1:-1, 1:-1] / (2.0 * dx * dy)
    add(cc, flat[2:, 2:], w)
    add(cc, flat[:-2, :-2], w)
    add(cc, flat[2:, :-2], -w)
    add(cc, flat[:-2, 2:], -w)

    for axis, (b, h) in enumerate([(b1, dx), (b2, dy)]):
        shift = ny if axis == 0 else 1
        n_axis = nx if axis == 0 else ny
        pos = np.zeros((nx, ny), dtype=bool)
        neg = np.zeros((nx, ny), dtype=bool)
        if axis == 0:
            pos[1:-1, :] = b[1:-1, :] > 0
            neg[1:-1, :] = b[1:-1, :] < 0
            lo_face = flat[0, :]
            hi_face = flat[-1, :]
            b_lo, b_hi = b[0, :], b[-1, :]
        else:
            pos[:, 1:-1] = b[:, 1:-1] > 0
            neg[:, 1:-1] = b[:, 1:-1] < 0
            lo_face = flat[:, 0]
            hi_face = flat[:, -1]
            b_lo, b_hi = b[:, 0], b[:, -1]
        fp = flat[pos]
        add(fp, fp + shift, b[pos] / h)
        add(fp, fp, -b[pos] / h)
        fn = flat[neg]
        add(fn, fn, b[neg] / h)
        add(fn, fn - shift, -b[neg] / h)
        if n_axis >= 3:
            add(lo_face, lo_face, -3.0 * b_lo / (2 * h))
            add(lo_face, lo_face + shift, 4.0 * b_lo / (2 * h))
            add(lo_face, lo_face + 2 * shift, -b_lo / (2 * h))
            add(hi_face, hi_face, 3.0 * b_hi / (2 * h))
            add(hi_face, hi_face - shift, -4.0 * b_hi / (2 * h))
            add(hi_face, hi_face - 2 * shift, b_hi / (2 * h))

    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nx * ny, nx * ny))
    return A.tocsr()


def check_explicit_stability(p: SwitchingProblem, grid: Grid) -> None:
    """Raise StabilityError unless dt <= dx^2 / (k max(ss*) + dx max|b|)."""
    coords = grid.node_coords()
    ts = grid.times()
    sample_ts = ts if p.diffusion.is_time_dependent() else ts[:1]
    max_a = 0.0
    max_b = 0.0
    for t in sample_ts:
        cov = p.diffusion.covariance_at(t, coords)
        drift = p.diffusion.drift_at(t, coords)
        max_a = max(max_a, float(np.max(np.abs(np.diagonal(cov, axis1=0, axis2=1)))))
        max_b = max(max_b, float(np.max(np.abs(drift))))
    dx = min(grid.dx)
    denom = grid.k * max_a + dx * max_b
    if denom > 0 and grid.dt > dx ** 2 / denom * (1 + 1e-12):
        raise StabilityError(
            f"explicit step dt = {grid.dt:.4g} exceeds the stability bound "
            f"{dx ** 2 / denom:.4g}; refine time or use the implicit scheme")


# ---------------------------------------------------------------------------
# Value field
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValueField:
    """Mode-indexed value surfaces on the space-time grid.

    ``v`` has shape (m, n_time + 1, n_nodes); mode i's surface is
    ``values(i)`` (1-based).
    """

    v: np.ndarray
    grid: Grid
    problem_id: str
    scheme: str

    @property
    def m(self):
        return self.v.shape[0]

    def values(self, mode: int) -> np.ndarray:
        return self.v[mode - 1]

    def at(self, mode: int, t: float, x) -> float:
        """Value by nearest time level and multilinear space interpolation."""
        ts = self.grid.times()
        l = int(np.clip(round(t / self.grid.dt), 0, self.grid.n_time))
        slab = self.v[mode - 1, l].reshape(self.grid.shape)
        return float(_interp(self.grid, slab, np.atleast_1d(x)))

    def to_csv(self, path) -> None:
        import csv as _csv
        coords = self.grid.node_coords()
        ts = self.grid.times()
        k = self.grid.k
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = _csv.writer(fh)
            idx_cols = [f"space_index{a + 1}" for a in range(k)]
            w.writerow(["mode", "time_index"] + idx_cols + ["t"]
                       + [f"x{a + 1}" for a in range(k)] + ["v"])
            unravel = np.unravel_index(np.arange(self.grid.n_nodes),
                                       self.grid.shape)
            for mode in range(self.m):
                for l in range(self.grid.n_time + 1):
                    row_v = self.v[mode, l]
                    for n in range(self.grid.n_nodes):
                        w.writerow([mode + 1, l]
                                   + [int(u[n]) for u in unravel]
                                   + [repr(float(ts[l]))]
                                   + [repr(float(c)) for c in coords[:, n]]
                                   + [repr(float(row_v[n]))])

    def save(self, path) -> None:
        np.savez_compressed(
            path, v=self.v,
            bounds=np.array(self.grid.bounds, dtype=float),
            n_space=np.array(self.grid.n_space, dtype=int),
            n_time=self.grid.n_time, horizon=self.grid.horizon,
            problem_id=self.problem_id, scheme=self.scheme)

    @staticmethod
    def load(path) -> "ValueField":
        with np.load(path, allow_pickle=False) as data:
            grid = Grid(bounds=tuple(map(tuple, data["bounds"])),
                        n_space=tuple(int(n) for n in data["n_space"]),
                        n_time=int(data["n_time"]),
                        horizon=float(data["horizon"]))
            return ValueField(v=data["v"], grid=grid,
                              problem_id=str(data["problem_id"]),
                              scheme=str(data["scheme"]))


def _interp(grid: Grid, slab: np.ndarray, x) -> float:
    """Multilinear interpolation of one time slab at point x."""
    weights = []
    idx = []
    for (lo, hi), n, xi in zip(grid.bounds, grid.n_space, x):
        h = (hi - lo) / (n - 1)
        f = np.clip((xi - lo) / h, 0, n - 1)
        i0 = int(min(np.floor(f), n - 2))
        weights.append((1.0 - (f - i0), f - i0))
        idx.append(i0)
    if grid.k == 1:
        i0 = idx[0]
        w0, w1 = weights[0]
        return w0 * slab[i0] + w1 * slab[i0 + 1]
    i0, j0 = idx
    (wx0, wx1), (wy0, wy1) = weights
    return (wx0 * (wy0 * slab[i0, j0] + wy1 * slab[i0, j0 + 1])
            + wx1 * (wy0 * slab[i0 + 1, j0] + wy1 * slab[i0 + 1, j0 + 1]))


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------

def _obstacles(p, t, coords, v_rows):
    """max_{j != i}(-g_ij + v_j) for every mode; v_rows is (m, n_nodes)."""
    m = p.m
    out = np.full_like(v_rows, -np.inf)
    for i in range(1, m + 1):
        for j in p.other_modes(i):
            cand = -np.broadcast_arrays(p.cost_at(i, j, t, coords),
                                        coords[0])[0] + v_rows[j - 1]
            np.maximum(out[i - 1], cand, out=out[i - 1])
    return out


def _project(p, t, coords, v_rows, tol_policy, max_iters, mode_order):
    """Iterate the obstacle projection across modes to its exact fixed point."""
    order = mode_order if mode_order is not None else range(1, p.m + 1)
    for _ in range(max_iters):
        change = 0.0
        for i in order:
            best = None
            for j in p.other_modes(i):
                cand = -np.broadcast_arrays(p.cost_at(i, j, t, coords),
                                            coords[0])[0] + v_rows[j - 1]
                best = cand if best is None else np.maximum(best, cand)
            new = np.maximum(v_rows[i - 1], best)
            change = max(change, float(np.max(new - v_rows[i - 1])))
            v_rows[i - 1] = new
        if change == 0.0:
            return
    if change > tol_policy:
        raise FdError(f"obstacle projection did not reach a fixed point within "
                      f"{max_iters} passes (residual {change:.3g})")


def _solve_mode_lcp(B, lu_plain, rhs, obst, max_iters):
    """Solve min(v - obst, B v - rhs) = 0 by active-set iteration.

    B is an M-matrix (I - dt A with upwinded drift), for which the
    semismooth Newton update settles on the exact active set in finitely
    many passes: constrained rows become v = obst, the rest keep B v = rhs.
    """
    v = lu_plain.solve(rhs)
    active = (v - obst) < 0.0
    if not active.any():
        return v
    for _ in range(max_iters):
        cont = sp.diags((~active).astype(float))
        M = (cont @ B + sp.diags(active.astype(float))).tocsc()
        v = splu(M).solve(np.where(active, obst, rhs))
        new_active = (v - obst) <= (B @ v - rhs)
        if np.array_equal(new_active, active):
            return v
        active = new_active
    raise FdError(f"obstacle active set did not settle within "
                  f"{max_iters} passes")


def _solve_level_implicit(p, t, coords, B, lu_plain, dt, v_next,
                          tol_policy, max_iters, order):
    """One implicit time level of the coupled obstacle system.

    Sweeps the modes Gauss-Seidel style, each solving its own obstacle
    problem against the latest values of the others, until the coupled
    fixed point is reached (the obstacles are inter-connected, so one
    mode's update can raise another's floor).
    """
    m = p.m
    cur = np.empty((m, v_next.shape[1]))
    rhs = np.empty_like(cur)
    for i in range(1, m + 1):
        psi = np.broadcast_arrays(p.psi_at(i, t, coords), coords[0])[0]
        rhs[i - 1] = v_next[i - 1] + dt * psi
        cur[i - 1] = lu_plain.solve(rhs[i - 1])
    scale = max(1.0, float(np.max(np.abs(cur))))
    for _ in range(max_iters):
        change = 0.0
        for i in order:
            best = None
            for j in p.other_modes(i):
                cand = -np.broadcast_arrays(p.cost_at(i, j, t, coords),
                                            coords[0])[0] + cur[j - 1]
                best = cand if best is None else np.maximum(best, cand)
            new = _solve_mode_lcp(B, lu_plain, rhs[i - 1], best, max_iters)
            change = max(change, float(np.max(np.abs(new - cur[i - 1]))))
            cur[i - 1] = new
        if change <= 1e-13 * scale:
            return cur
    if change > tol_policy:
        raise FdError(f"coupled obstacle solve did not reach a fixed point "
                      f"(last sweep moved {change:.3g})")
    return cur


def solve_fd(p: SwitchingProblem, grid: Grid, scheme: str = "implicit",
             tol_policy: float = 1e-9, max_policy_iters: int = 100,
             mode_order=None) -> ValueField:
    """Backward sweep from T to 0 with per-level obstacle projection."""
    if scheme not in ("explicit", "implicit"):
        raise ValueError("scheme must be 'explicit' or 'implicit'")
    if p.k != grid.k:
        raise FdError("grid dimension does not match the problem")
    if scheme == "explicit":
        check_explicit_stability(p, grid)

    coords = grid.node_coords()
    ts = grid.times()
    dt = grid.dt
    n_nodes = grid.n_nodes
    m = p.m
    time_dep = p.diffusion.is_time_dependent()

    v = np.zeros((m, grid.n_time + 1, n_nodes))

    A_cached = None
    B_cached = None
    lu_cached = None
    ident = sp.identity(n_nodes, format="csc")
    order = tuple(mode_order) if mode_order is not None else tuple(range(1, m + 1))
    for l in range(grid.n_time - 1, -1, -1):
        t_new = ts[l]
        t_old = ts[l + 1]
        if scheme == "explicit":
            cur = np.empty((m, n_nodes))
            if A_cached is None or time_dep:
                A_cached = discretize_generator(p, grid, t_old)
            for i in range(1, m + 1):
                psi = np.broadcast_arrays(p.psi_at(i, t_old, coords), coords[0])[0]
                cur[i - 1] = v[i - 1, l + 1] + dt * (A_cached @ v[i - 1, l + 1] + psi)
            _project(p, t_new, coords, cur, tol_policy, max_policy_iters,
                     mode_order)
        else:
            if lu_cached is None or time_dep:
                A = discretize_generator(p, grid, t_new)
                B_cached = (ident - dt * A).tocsr()
                try:
                    lu_cached = splu(B_cached.tocsc())
                except RuntimeError as exc:
                    raise FdError(f"implicit solve failed at time level {l}: "
                                  f"{exc}") from exc
            cur = _solve_level_implicit(p, t_new, coords, B_cached, lu_cached,
                                        dt, v[:, l + 1, :], tol_policy,
                                        max_policy_iters, order)
        v[:, l, :] = cur

    return ValueField(v=v, grid=grid, problem_id=problem_hash(p), scheme=scheme)


# ---------------------------------------------------------------------------
# Residuals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResidualReport:
    max_abs: float
    location: tuple  # (mode, time_index, node_index)
    n_continuation: int
    n_switching: int
    obstacle_min_slack: float

    def to_dict(self):
        return {
            "max_abs": self.max_abs,
            "location": {"mode": self.location[0], "time_index": self.location[1],
                         "node_index": self.location[2]},
            "n_continuation": self.n_continuation,
            "n_switching": self.n_switching,
            "obstacle_min_slack": self.obstacle_min_slack,
        }


def residuals(field: ValueField, p: SwitchingProblem,
              region_tol: float = 1e-8) -> ResidualReport:
    """Discrete complementarity residual over interior space-time nodes.

    At every interior node computes min(v_i - obstacle_i,
    -dv/dt - A v - psi_i) and partitions nodes into continuation (obstacle
    slack above ``region_tol``) and switching regions.  The time
    derivative uses a central difference where both neighbours exist, so
    the residual is an independent truncation-error measure rather than
    the stencil the solver nulls by construction; it shrinks under grid
    refinement.
    """
    grid = field.grid
    coords = grid.node_coords()
    ts = grid.times()
    dt = grid.dt
    interior = grid.interior_mask()
    time_dep = p.diffusion.is_time_dependent()

    max_abs = -1.0
    loc = (1, 0, 0)
    n_cont = 0
    n_switch = 0
    min_slack = np.inf
    A = None
    for l in range(grid.n_time):
        t = ts[l]
        if A is None or time_dep:
            A = discretize_generator(p, grid, t)
        v_rows = field.v[:, l, :]
        obst = _obstacles(p, t, coords, v_rows)
        for i in range(1, p.m + 1):
            psi = np.broadcast_arrays(p.psi_at(i, t, coords), coords[0])[0]
            if l > 0:
                dvdt = (field.v[i - 1, l + 1] - field.v[i - 1, l - 1]) / (2 * dt)
            else:
                dvdt = (field.v[i - 1, l + 1] - v_rows[i - 1]) / dt
            pde = -dvdt - (A @ v_rows[i - 1]) - psi
            slack = v_rows[i - 1] - obst[i - 1]
            r = np.minimum(slack, pde)[interior]
            min_slack = min(min_slack, float(np.min(slack)))
            n_switch += int(np.sum(slack[interior] <= region_tol))
            n_cont += int(np.sum(slack[interior] > region_tol))
            j = int(np.argmax(np.abs(r)))
            if abs(r[j]) > max_abs:
                max_abs = float(abs(r[j]))
                loc = (i, l, int(np.flatnonzero(interior)[j]))
    return ResidualReport(max_abs=max_abs, location=loc,
                          n_continuation=n_cont, n_switching=n_switch,
                          obstacle_min_slack=float(min_slack))
