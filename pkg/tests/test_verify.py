"""The cross-check harness: named checks, skips, symmetry, and determinism."""

import numpy as np
import pytest

import switchbox as sb

ALL_CHECKS = {
    "fd_vs_mc", "fd_vs_oracle", "mc_vs_oracle",
    "obstacle_inequality", "complementarity_residual",
    "monotone_iterates", "mc_converged", "mc_upper_bound",
    "strategy_optimality", "random_domination", "dpp_n1", "dpp_n3",
    "switch_tail", "continuity_probe",
}


def _zero_problem():
    return sb.problem_from_dict({
        "name": "all-zero",
        "dimension": 1,
        "horizon": 1.0,
        "drift": ["0"],
        "sigma": [["1"]],
        "psi": ["0", "0"],
        "g": "0.5",
        "alpha": 0.5,
        "x0": [0.0],
        "initial_mode": 1,
    })


@pytest.fixture(scope="module")
def zero_report():
    p = _zero_problem()
    grid = sb.grid_for_problem(p, 60, 120)
    fd = sb.solve_fd(p, grid)
    e_mc = sb.simulate(p, 0.0, p.x0, 4000, 50, seed=31)
    mc = sb.solve_mc(p, e_mc, tol=1e-3, degree=2)
    e_ind = sb.simulate(p, 0.0, p.x0, 10_000, 50, seed=32)
    return sb.cross_check(p, fd, mc, ensemble=e_ind, mc_ensemble=e_mc)


def test_thresholds_load():
    th = sb.load_thresholds()
    for key in ("fd_value_tol", "mc_se_mult", "residual_max", "obstacle_tol",
                "oracle_doubling_tol", "dpp_extra_tol"):
        assert key in th and float(th[key]) >= 0


def test_zero_problem_all_pass(zero_report):
    names = {c.name for c in zero_report.checks}
    assert names == ALL_CHECKS
    assert zero_report.overall_pass
    # oracle checks skip (none supplied); everything else runs
    assert zero_report["fd_vs_oracle"].status == "skip"
    assert zero_report["mc_vs_oracle"].status == "skip"
    for name in names - {"fd_vs_oracle", "mc_vs_oracle",
                         "monotone_iterates"}:
        assert zero_report[name].status == "pass", name
    # the zero problem converges at the first iterate, so there may be
    # no (n >= 1, n + 1) pair to compare
    assert zero_report["monotone_iterates"].status in ("pass", "skip")
    # with zero rates every value estimate is numerically zero
    assert abs(zero_report["fd_vs_mc"].measured) <= 1e-8
    assert zero_report["switch_tail"].measured == 0.0


def test_skips_without_ensembles(benchmark, benchmark_fd_small):
    e = sb.simulate(benchmark, 0.0, benchmark.x0, 2000, 50, seed=41)
    mc = sb.solve_mc(benchmark, e, tol=5e-3, degree=4, n_max=6)
    rep = sb.cross_check(benchmark, benchmark_fd_small, mc)
    for name in ("strategy_optimality", "random_domination", "dpp_n1",
                 "dpp_n3", "switch_tail", "mc_upper_bound"):
        assert rep[name].status == "skip", name
    assert rep["fd_vs_mc"].status in ("pass", "fail")


def test_oracle_checks_present(benchmark, benchmark_fd_small,
                               benchmark_oracle_small):
    e = sb.simulate(benchmark, 0.0, benchmark.x0, 2000, 50, seed=41)
    mc = sb.solve_mc(benchmark, e, tol=5e-3, degree=4, n_max=6)
    rep = sb.cross_check(benchmark, benchmark_fd_small, mc,
                         oracle=benchmark_oracle_small)
    assert rep["fd_vs_oracle"].status == "pass"
    assert rep["fd_vs_oracle"].measured <= rep["fd_vs_oracle"].threshold


def test_report_json_deterministic(zero_report):
    a = zero_report.to_json()
    b = sb.verify.Report(checks=list(zero_report.checks)).to_json()
    assert a == b
    assert '"overall_pass": true' in a


def test_mirror_symmetry(benchmark, benchmark_fd_small):
    chk = sb.verify.mirror_symmetry(benchmark_fd_small)
    assert chk.status == "pass"
    assert chk.measured <= chk.threshold


def test_mirror_symmetry_detects_asymmetry(deterministic):
    # modes with unrelated rates fail the check on a centred grid
    p = sb.problem_from_dict({
        "name": "lopsided", "dimension": 1, "horizon": 1.0,
        "drift": ["0"], "sigma": [["1"]], "psi": ["x1", "0"],
        "g": "0.1", "alpha": 0.1, "x0": [0.0], "initial_mode": 1,
    })
    grid = sb.grid_for_problem(p, 50, 100)
    chk = sb.verify.mirror_symmetry(sb.solve_fd(p, grid))
    assert chk.status == "fail"
    # an off-centre grid is rejected outright: reflection leaves the box
    dgrid = sb.grid_for_problem(deterministic, 50, 100)
    with pytest.raises(ValueError):
        sb.verify.mirror_symmetry(sb.solve_fd(deterministic, dgrid))
