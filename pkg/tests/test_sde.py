import os

import numpy as np
import pytest

import switchbox as sb
from switchbox.model import problem_from_dict
from switchbox.sde import ensemble_to_csv, gaussian_increments, path_increments

# high-resolution brute-force reference for E[sup_{s<=1} |B_s|^2]
# (200k paths at 2000 steps, frozen)
SUP_B_SQUARED = 1.7906


def diffusion_doc(drift, sigma, x0):
    return problem_from_dict({
        "dimension": 1, "horizon": 1.0,
        "drift": [drift], "sigma": [[sigma]],
        "psi": ["0", "0"], "g": "0.5", "alpha": 0.5, "x0": [x0],
    })


def test_degenerate_sde_constant_paths():
    p = diffusion_doc("0", "0", 1.0)
    e = sb.simulate(p, 0.0, p.x0, 50, 20, 3)
    np.testing.assert_array_equal(e.states, np.ones_like(e.states))


def test_deterministic_drift_reaches_one():
    p = diffusion_doc("1", "0", 0.0)
    e = sb.simulate(p, 0.0, p.x0, 4, 1000, 3)
    np.testing.assert_allclose(e.states[:, -1, 0], 1.0, atol=1e-2)


def test_brownian_terminal_law():
    p = diffusion_doc("0", "1", 0.0)
    e = sb.simulate(p, 0.0, p.x0, 10 ** 5, 50, 17)
    xt = e.states[:, -1, 0]
    assert abs(xt.mean()) <= 3.0 / np.sqrt(10 ** 5)
    assert abs(xt.var(ddof=1) - 1.0) <= 0.05


def test_seed_determinism_and_per_path_streams():
    p = diffusion_doc("0", "1", 0.0)
    a = sb.simulate(p, 0.0, p.x0, 64, 32, 9)
    b = sb.simulate(p, 0.0, p.x0, 64, 32, 9)
    np.testing.assert_array_equal(a.states, b.states)
    # any single path is reproducible in isolation from its own stream
    one = path_increments(9, 41, 32, 1)
    np.testing.assert_array_equal(gaussian_increments(9, 64, 32, 1)[41], one)


def test_thread_count_does_not_change_increments():
    old = os.environ.get("SWITCHBOX_THREADS")
    try:
        os.environ["SWITCHBOX_THREADS"] = "1"
        a = gaussian_increments(5, 200, 16, 2)
        os.environ["SWITCHBOX_THREADS"] = "4"
        b = gaussian_increments(5, 200, 16, 2)
    finally:
        if old is None:
            os.environ.pop("SWITCHBOX_THREADS", None)
        else:
            os.environ["SWITCHBOX_THREADS"] = old
    np.testing.assert_array_equal(a, b)


def test_moment_check_constant_ensemble():
    p = diffusion_doc("0", "0", 1.0)
    e = sb.simulate(p, 0.0, p.x0, 100, 10, 1)
    rep = sb.moment_check(e, 2)
    assert rep.estimate == 1.0


def test_moment_check_brownian_sup_square():
    p = diffusion_doc("0", "1", 0.0)
    e = sb.simulate(p, 0.0, p.x0, 40000, 200, 23)
    rep = sb.moment_check(e, 2)
    assert abs(rep.estimate - SUP_B_SQUARED) <= 0.1 * SUP_B_SQUARED
    assert rep.standard_error > 0


def test_moment_check_identical_ensembles_zero_modulus():
    p = diffusion_doc("0", "1", 0.0)
    e = sb.simulate(p, 0.0, p.x0, 50, 20, 2)
    rep = sb.moment_check(e, 2, other=e)
    assert rep.continuity == 0.0


def test_moment_check_rejects_odd_order():
    p = diffusion_doc("0", "0", 1.0)
    e = sb.simulate(p, 0.0, p.x0, 10, 5, 1)
    with pytest.raises(ValueError):
        sb.moment_check(e, 3)


def test_gbm_strong_convergence_rate():
    """Halving the step roughly halves the mean-square error (rate 1/2)."""
    mu, vol, x0 = 0.05, 0.2, 1.0
    p = diffusion_doc(f"{mu} * x1", f"{vol} * x1", x0)
    n_paths, seed = 20000, 31

    def strong_err(n_steps):
        e = sb.simulate(p, 0.0, p.x0, n_paths, n_steps, seed)
        dt = 1.0 / n_steps
        dW = gaussian_increments(seed, n_paths, n_steps, 1)[:, :, 0] * np.sqrt(dt)
        w_t = np.cumsum(dW, axis=1)[:, -1]
        exact = x0 * np.exp((mu - 0.5 * vol ** 2) + vol * w_t)
        return np.sqrt(np.mean((e.states[:, -1, 0] - exact) ** 2))

    e1, e2 = strong_err(32), strong_err(64)
    assert e2 < e1
    assert e1 / e2 == pytest.approx(np.sqrt(2), rel=0.35)


def test_ensemble_csv_dump(tmp_path):
    p = diffusion_doc("0", "1", 0.0)
    e = sb.simulate(p, 0.0, p.x0, 3, 4, 7)
    out = tmp_path / "paths.csv"
    ensemble_to_csv(e, out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "path,step,time,x1"
    assert len(lines) == 1 + 3 * 5
