import pathlib

import pytest

import switchbox as sb

PROBLEMS = pathlib.Path(__file__).resolve().parent.parent / "problems"
DATA = pathlib.Path(__file__).resolve().parent / "data"


@pytest.fixture(scope="session")
def benchmark():
    return sb.load_problem(PROBLEMS / "benchmark.yaml")


@pytest.fixture(scope="session")
def identical_modes():
    return sb.load_problem(PROBLEMS / "identical_modes.yaml")


@pytest.fixture(scope="session")
def deterministic():
    return sb.load_problem(PROBLEMS / "deterministic.yaml")


@pytest.fixture(scope="session")
def gbm_power_plant():
    return sb.load_problem(PROBLEMS / "gbm_power_plant.yaml")


@pytest.fixture(scope="session")
def benchmark_fd_small(benchmark):
    """Coarse but usable benchmark solve shared across tests."""
    grid = sb.grid_for_problem(benchmark, 100, 200)
    return sb.solve_fd(benchmark, grid)


@pytest.fixture(scope="session")
def benchmark_oracle_small(benchmark):
    return sb.solve_dp(sb.build_chain(benchmark, 500), benchmark)
