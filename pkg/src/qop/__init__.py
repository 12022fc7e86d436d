"""Quadratic objective perturbation for private ERM in the interpolation regime."""
from .bounds import BoundInputs, FreeParams, eval_lop_bound, eval_qop_bound, optimize_qop_bound
from .erm import Anchor, Dataset, LassoProblem, generate_interpolation_dataset
from .mechanisms import (
    BudgetSplit,
    LopCalibration,
    PrivacyBudget,
    QopCalibration,
    calibrate_lop,
    calibrate_qop,
    run_lop,
    run_qop,
)
from .rmt import DeltaSplit, RmtConstants, WishartSpec, compute_constants, sample_wishart
from .solver import SolverConfig, stotos

__all__ = [
    "Anchor", "BoundInputs", "BudgetSplit", "Dataset", "DeltaSplit", "FreeParams",
    "LassoProblem", "LopCalibration", "PrivacyBudget", "QopCalibration", "RmtConstants",
    "SolverConfig", "WishartSpec", "calibrate_lop", "calibrate_qop", "compute_constants",
    "eval_lop_bound", "eval_qop_bound", "generate_interpolation_dataset", "optimize_qop_bound",
    "run_lop", "run_qop", "sample_wishart", "stotos",
]
