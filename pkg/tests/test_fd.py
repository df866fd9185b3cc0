import numpy as np
import pytest

import switchbox as sb
from switchbox.fd import (FdError, Grid, StabilityError,
                          check_explicit_stability, discretize_generator)
from switchbox.model import problem_from_dict


def make_problem(psi, g="0.5", alpha=0.5, sigma="1", drift="0", x0=0.0,
                 dim=1, sig_matrix=None):
    doc = {
        "dimension": dim, "horizon": 1.0,
        "drift": [drift] * dim,
        "sigma": sig_matrix or [[sigma if i == j else "0" for j in range(dim)]
                                for i in range(dim)],
        "psi": psi, "g": g, "alpha": alpha,
        "x0": [x0] * dim,
    }
    return problem_from_dict(doc)


def test_heat_stencil_interior_row():
    p = make_problem(["0", "0"])
    grid = Grid(bounds=((-1.0, 1.0),), n_space=(21,), n_time=10, horizon=1.0)
    A = discretize_generator(p, grid, 0.0).toarray()
    dx = grid.dx[0]
    row = A[10]
    np.testing.assert_allclose(row[9:12] * dx ** 2, [0.5, -1.0, 0.5],
                               atol=1e-12)


def test_upwind_drift_row():
    p = make_problem(["0", "0"], sigma="0", drift="1")
    grid = Grid(bounds=((-1.0, 1.0),), n_space=(21,), n_time=10, horizon=1.0)
    A = discretize_generator(p, grid, 0.0).toarray()
    dx = grid.dx[0]
    # positive drift uses the forward difference
    np.testing.assert_allclose(A[10, 10:12] * dx, [-1.0, 1.0], atol=1e-12)
    assert A[10, 9] == 0.0


def test_correlated_diffusion_cross_terms_psd():
    sig = [["1", "0"], ["0.5", "0.8660254037844386"]]  # sigma sigma* = [[1,.5],[.5,1]]
    p = make_problem(["0", "0"], dim=2, sig_matrix=sig)
    grid = Grid(bounds=((-1.0, 1.0), (-1.0, 1.0)), n_space=(9, 9), n_time=4,
                horizon=1.0)
    A = discretize_generator(p, grid, 0.0)
    assert A.shape == (81, 81)
    cov = p.diffusion.covariance_at(0.0, np.zeros((2, 1)))[:, :, 0]
    np.testing.assert_allclose(np.linalg.eigvalsh(cov), [0.5, 1.5], atol=1e-9)


def test_zero_data_gives_zero_field():
    p = make_problem(["0", "0"])
    grid = sb.grid_for_problem(p, 40, 40)
    f = sb.solve_fd(p, grid)
    np.testing.assert_allclose(f.v, 0.0, atol=1e-12)


def test_identical_modes_value_one(identical_modes):
    grid = sb.grid_for_problem(identical_modes, 80, 120)
    f = sb.solve_fd(identical_modes, grid)
    assert f.at(1, 0.0, np.array([0.0])) == pytest.approx(1.0, abs=1e-2)
    assert f.at(2, 0.0, np.array([0.7])) == pytest.approx(1.0, abs=1e-2)


def test_deterministic_closed_form(deterministic):
    grid = sb.grid_for_problem(deterministic, 60, 100)
    f = sb.solve_fd(deterministic, grid)
    x = np.array([1.0])
    assert f.at(1, 0.0, x) == pytest.approx(1.0, abs=1e-2)
    assert f.at(2, 0.0, x) == pytest.approx(0.9, abs=1e-2)


def test_terminal_slice_zero(benchmark_fd_small):
    np.testing.assert_array_equal(benchmark_fd_small.v[:, -1, :], 0.0)


def test_obstacle_inequality_every_node(benchmark_fd_small, benchmark):
    res = sb.residuals(benchmark_fd_small, benchmark)
    assert res.obstacle_min_slack >= -1e-10


def test_explicit_stability_gate(benchmark):
    fine = sb.grid_for_problem(benchmark, 200, 400)
    with pytest.raises(StabilityError):
        check_explicit_stability(benchmark, fine)
    with pytest.raises(StabilityError):
        sb.solve_fd(benchmark, fine, scheme="explicit")


def test_explicit_implicit_agreement(benchmark):
    grid = sb.grid_for_problem(benchmark, 80, 800)
    check_explicit_stability(benchmark, grid)  # must be admissible
    fe = sb.solve_fd(benchmark, grid, scheme="explicit")
    fi = sb.solve_fd(benchmark, grid, scheme="implicit")
    x = np.array([0.0])
    tol = 10 * max(grid.dt, grid.dx[0] ** 2)
    assert abs(fe.at(1, 0.0, x) - fi.at(1, 0.0, x)) <= tol


def test_mode_order_changes_nothing_material(benchmark):
    grid = sb.grid_for_problem(benchmark, 60, 120)
    a = sb.solve_fd(benchmark, grid, mode_order=(1, 2))
    b = sb.solve_fd(benchmark, grid, mode_order=(2, 1))
    assert np.max(np.abs(a.v - b.v)) <= 1e-9


def test_monotone_in_profit_rates(benchmark):
    richer = make_problem(["x1 + 0.3", "0.3 - x1"], g="0.1", alpha=0.1)
    grid = sb.grid_for_problem(benchmark, 60, 120)
    base = sb.solve_fd(benchmark, grid)
    up = sb.solve_fd(richer, grid)
    assert np.min(up.v - base.v) >= -1e-9


def test_refinement_moves_value_less_than_coarse_error(benchmark,
                                                       benchmark_oracle_small):
    x = np.array([0.0])
    coarse = sb.solve_fd(benchmark, sb.grid_for_problem(benchmark, 100, 200))
    fine = sb.solve_fd(benchmark, sb.grid_for_problem(benchmark, 200, 400))
    ref = benchmark_oracle_small.root(1)
    coarse_err = abs(coarse.at(1, 0.0, x) - ref)
    assert abs(fine.at(1, 0.0, x) - coarse.at(1, 0.0, x)) <= coarse_err + 1e-3


def test_residual_flags_injected_defect(benchmark, benchmark_fd_small):
    bumped = benchmark_fd_small.v.copy()
    l, node = 50, benchmark_fd_small.grid.n_nodes // 2 + 3
    bumped[0, l, node] += 0.1
    defective = sb.ValueField(v=bumped, grid=benchmark_fd_small.grid,
                              problem_id=benchmark_fd_small.problem_id,
                              scheme=benchmark_fd_small.scheme)
    res = sb.residuals(defective, benchmark)
    assert res.location[0] == 1
    # the defect leaks into neighbouring stencils; it must be flagged at
    # the bumped node within one time level
    assert abs(res.location[1] - l) <= 1
    assert res.location[2] == node
    assert res.max_abs > sb.residuals(benchmark_fd_small, benchmark).max_abs


def test_value_field_save_load_roundtrip(tmp_path, benchmark_fd_small):
    path = tmp_path / "field.npz"
    benchmark_fd_small.save(path)
    loaded = sb.ValueField.load(path)
    np.testing.assert_array_equal(loaded.v, benchmark_fd_small.v)
    assert loaded.scheme == benchmark_fd_small.scheme
    assert loaded.problem_id == benchmark_fd_small.problem_id


def test_csv_export_shape(tmp_path, benchmark_fd_small):
    out = tmp_path / "v.csv"
    benchmark_fd_small.to_csv(out)
    lines = out.read_text().strip().splitlines()
    grid = benchmark_fd_small.grid
    assert len(lines) == 1 + 2 * (grid.n_time + 1) * grid.n_nodes
