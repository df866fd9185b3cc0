"""Report figures rendered alongside the delimited artifacts."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .fd import ValueField, _obstacles
from .mc import SnellIterate
from .model import SwitchingProblem
from .strategy import TailReport

__all__ = ["value_figure", "iterates_figure", "tail_figure"]


def value_figure(field: ValueField, p: SwitchingProblem, path) -> None:
    """Initial-time value curves with the switching regions shaded (k = 1)
    or the first mode's surface as a heat map (k = 2)."""
    grid = field.grid
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if grid.k == 1:
        x = grid.axes()[0]
        coords = grid.node_coords()
        v_rows = field.v[:, 0, :]
        obst = _obstacles(p, 0.0, coords, v_rows)
        for i in range(1, p.m + 1):
            ax.plot(x, v_rows[i - 1], label=f"mode {i}")
            binding = v_rows[i - 1] <= obst[i - 1] + 1e-8
            if np.any(binding):
                ax.plot(x[binding], v_rows[i - 1][binding], ".", ms=3,
                        color=ax.lines[-1].get_color(), alpha=0.5)
        ax.set_xlabel("x")
        ax.set_ylabel("value at t = 0")
        ax.legend()
    else:
        x, y = grid.axes()
        ax.imshow(field.v[0, 0].reshape(grid.shape).T, origin="lower",
                  extent=[x[0], x[-1], y[0], y[-1]], aspect="auto")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
        ax.set_title("mode 1 value at t = 0")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def iterates_figure(mc: SnellIterate, path) -> None:
    """Mean start value per iteration with 2 SE bars, one line per mode."""
    fig, ax = plt.subplots(figsize=(6, 4))
    if mc.history:
        ns = [h[0] for h in mc.history]
        m = len(mc.history[0][1])
        for mode in range(m):
            means = [h[1][mode] for h in mc.history]
            errs = [2 * h[2][mode] for h in mc.history]
            ax.errorbar(ns, means, yerr=errs, marker="o", capsize=3,
                        label=f"mode {mode + 1}")
        ax.legend()
    ax.set_xlabel("allowed switches (iteration)")
    ax.set_ylabel("mean value at start")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def tail_figure(tail: TailReport, path) -> None:
    """n * P[tau_n < T] against n with the small-n bound."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ns = np.arange(1, len(tail.n_times_p) + 1)
    ax.plot(ns, tail.n_times_p, "o-", label="n * P[tau_n < T]")
    ax.axhline(tail.bound, ls="--", color="gray", label="small-n bound")
    ax.set_xlabel("n")
    ax.set_ylabel("n * tail probability")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
