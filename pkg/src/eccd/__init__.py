"""Elastic-net penalized GLMs solved by block coordinate descent with a
first-order Taylor correction inside each block (ECCD), plus the classical
cyclic (CD) and naive block (BCD) baselines."""

from .data import (
    Dataset,
    SyntheticConfig,
    generate_synthetic,
    load_csv,
    load_libsvm,
    parse_libsvm,
    standardize,
)
from .deviance import deviance, deviance_converged, null_deviance
from .errors import (
    ConfigError,
    DimensionError,
    DomainError,
    ECCDError,
    NumericalError,
    ParseError,
    SaturationError,
)
from .families import BERNOULLI, GAMMA, GAUSSIAN, POISSON, FamilySpec, Kind
from .path import LambdaPath, PathResult, build_path, fit_path, solve_path
from .screening import kkt_max_residual, kkt_scan, lambda_max, strong_rule_set
from .solvers import (
    Algorithm,
    FitResult,
    SolveConfig,
    bcd_epoch,
    cd_epoch,
    eccd_epoch,
    objective,
    solve_single_lambda,
)

__version__ = "0.1.0"

__all__ = [
    "Algorithm", "BERNOULLI", "ConfigError", "Dataset", "DimensionError", "DomainError",
    "ECCDError", "FamilySpec", "FitResult", "GAMMA", "GAUSSIAN", "Kind", "LambdaPath",
    "NumericalError", "POISSON", "ParseError", "PathResult", "SaturationError", "SolveConfig",
    "SyntheticConfig", "bcd_epoch", "build_path", "cd_epoch", "deviance", "deviance_converged",
    "eccd_epoch", "fit_path", "generate_synthetic", "kkt_max_residual", "kkt_scan", "lambda_max",
    "load_csv", "load_libsvm", "null_deviance", "objective", "parse_libsvm", "solve_path",
    "solve_single_lambda", "standardize", "strong_rule_set",
]
