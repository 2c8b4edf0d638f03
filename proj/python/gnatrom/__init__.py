"""Hyper-reduced Gauss-Newton model reduction for parameterized 1D Burgers."""

from ._gnatrom import (
    BurgersModel,
    ConfigError,
    IoError,
    ParameterPoint,
    SolverConfig,
    SolverError,
    TimeDiscretization,
    greedy_select,
    parse_parameter_point,
    pod,
    run_compare,
    run_offline,
    run_online,
    solve_fom,
)

__all__ = [
    "BurgersModel",
    "ConfigError",
    "IoError",
    "ParameterPoint",
    "SolverConfig",
    "SolverError",
    "TimeDiscretization",
    "greedy_select",
    "parse_parameter_point",
    "pod",
    "run_compare",
    "run_offline",
    "run_online",
    "solve_fom",
]
