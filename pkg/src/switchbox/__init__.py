"""Solvers and cross-checks for finite-horizon multi-mode switching problems."""

__version__ = "0.1.0"

from .expressions import DomainError, ParseError, eval_expr, parse_expr
from .fd import Grid, ValueField, grid_for_problem, residuals, solve_fd
from .mc import SnellIterate, picard_step, snell_stage0, solve_mc
from .model import (DiffusionSpec, ProblemError, SwitchingProblem,
                    load_problem, problem_from_dict, problem_hash,
                    validate_problem)
from .sde import PathEnsemble, moment_check, simulate
from .strategy import (check_dpp, extract_policy, random_strategy_profits,
                       recompute_profit, simulate_strategy,
                       switch_statistics, traces_to_csv)
from .tree import OracleValue, build_chain, solve_dp
from .verify import Report, cross_check, load_thresholds

__all__ = [
    "__version__",
    "DiffusionSpec", "SwitchingProblem", "ProblemError",
    "load_problem", "problem_from_dict", "problem_hash", "validate_problem",
    "parse_expr", "eval_expr", "ParseError", "DomainError",
    "PathEnsemble", "simulate", "moment_check",
    "Grid", "ValueField", "grid_for_problem", "solve_fd", "residuals",
    "SnellIterate", "snell_stage0", "picard_step", "solve_mc",
    "OracleValue", "build_chain", "solve_dp",
    "extract_policy", "simulate_strategy", "switch_statistics", "check_dpp",
    "recompute_profit", "random_strategy_profits", "traces_to_csv",
    "Report", "cross_check", "load_thresholds",
]
