import numpy as np
import pytest

import switchbox as sb
from switchbox.model import problem_from_dict
from switchbox.tree import TreeError, read_golden, solve_stopping, write_golden

from conftest import DATA

# single-mode optimal stopping of the integrated rate "x1" from x0 = 0,
# frozen from a 2000-level run (4000 levels agrees to 2.2e-5)
STOPPING_X1 = 0.21311


def make_problem(psi, g="0.5", alpha=0.5, sigma="1", drift="0", x0=0.0):
    return problem_from_dict({
        "dimension": 1, "horizon": 1.0, "drift": [drift],
        "sigma": [[sigma]], "psi": psi, "g": g, "alpha": alpha, "x0": [x0],
    })


def test_symmetric_trinomial_probabilities(benchmark):
    chain = sb.build_chain(benchmark, 1000)
    for level in (0, 1, 500):
        pu, pm, pd = chain.probs(level)
        np.testing.assert_allclose(pu, 1 / 6, atol=1e-12)
        np.testing.assert_allclose(pm, 2 / 3, atol=1e-12)
        np.testing.assert_allclose(pd, 1 / 6, atol=1e-12)


def test_huge_drift_is_infeasible():
    p = make_problem(["0", "0"], drift="1000")
    with pytest.raises(TreeError):
        sb.build_chain(p, 100)


def test_wrong_dimension_rejected():
    p = problem_from_dict({
        "dimension": 2, "horizon": 1.0, "drift": ["0", "0"],
        "sigma": [["1", "0"], ["0", "1"]], "psi": ["0", "0"],
        "g": "0.5", "alpha": 0.5, "x0": [0.0, 0.0],
    })
    with pytest.raises(TreeError):
        sb.build_chain(p, 10)


def test_gbm_lattice_feasible_for_small_dt():
    """GBM coefficients admit a feasible positive lattice.

    The spacing must keep every node away from zero (where the local
    volatility vanishes but the drift does not) and the reference
    volatility must cover the largest node, which bounds the usable
    horizon; 20 levels over T = 0.25 with sigma_ref = 0.232 satisfies
    both, checked exhaustively."""
    p = problem_from_dict({
        "dimension": 1, "horizon": 0.25, "drift": ["0.05 * x1"],
        "sigma": [["0.2 * x1"]], "psi": ["0", "0"], "g": "0.5",
        "alpha": 0.5, "x0": [1.0],
    })
    chain = sb.build_chain(p, 20, sigma_ref=0.232)
    for level in range(20):
        pu, pm, pd = chain.probs(level)
        for arr in (pu, pm, pd):
            assert np.all(arr >= -1e-12) and np.all(arr <= 1 + 1e-12)
        np.testing.assert_allclose(np.asarray(pu) + pm + pd, 1.0, atol=1e-12)


def test_zero_rates_give_zero_values():
    p = make_problem(["0", "0"])
    o = sb.solve_dp(sb.build_chain(p, 50), p)
    assert o.root(1) == 0.0
    assert o.root(2) == 0.0


def test_identical_modes_exact(identical_modes):
    o = sb.solve_dp(sb.build_chain(identical_modes, 100), identical_modes)
    assert o.root(1) == pytest.approx(1.0, abs=1e-12)


def test_deterministic_case_machine_precision(deterministic):
    o = sb.solve_dp(sb.build_chain(deterministic, 200), deterministic)
    assert o.root(1) == pytest.approx(1.0, abs=1e-12)
    assert o.root(2) == pytest.approx(0.9, abs=1e-12)


def test_obstacle_inequality_by_construction(benchmark):
    chain = sb.build_chain(benchmark, 100)
    o = sb.solve_dp(chain, benchmark)
    for level in range(chain.n_levels + 1):
        x = chain.nodes(level)[None, :]
        t = level * chain.dt
        g = np.broadcast_arrays(benchmark.cost_at(1, 2, t, x), x[0])[0]
        assert np.all(o.w[1][level] >= -g + o.w[2][level] - 1e-12)


def test_single_mode_stopping_reference(benchmark):
    val = solve_stopping(sb.build_chain(benchmark, 2000), benchmark, 1)
    assert val == pytest.approx(STOPPING_X1, abs=5e-4)


def test_golden_file_matches_fresh_solve(benchmark):
    golden = read_golden(DATA / "benchmark_oracle.txt")
    assert golden["problem"] == sb.problem_hash(benchmark)
    assert golden["n_levels"] == 2000
    o = sb.solve_dp(sb.build_chain(benchmark, 2000), benchmark)
    for mode, recorded in golden["roots"].items():
        assert o.root(mode) == pytest.approx(recorded, abs=1e-6)


def test_golden_roundtrip(tmp_path, benchmark):
    o = sb.solve_dp(sb.build_chain(benchmark, 20), benchmark)
    path = tmp_path / "golden.txt"
    write_golden(path, o)
    back = read_golden(path)
    assert back["n_levels"] == 20
    assert back["roots"][1] == pytest.approx(o.root(1), abs=1e-6)
