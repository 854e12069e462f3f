"""MILP assembly and the bundled branch-and-bound solver."""

from .branch_bound import BranchAndBound, SolverBackend, solve
from .build import RayTable, build_model, default_big_m, nearest_endpoints
from .extract import Reconstruction, extract_reconstruction
from .lp import LpArrays, lp_relax_solve
from .model import (
    LinearConstraint,
    MilpModel,
    ModelParams,
    Solution,
    SolveStatus,
    VarId,
    VarKind,
    Variable,
    feasibility_witness,
    write_lp,
)

__all__ = [
    "BranchAndBound",
    "LinearConstraint",
    "LpArrays",
    "MilpModel",
    "ModelParams",
    "RayTable",
    "Reconstruction",
    "Solution",
    "SolveStatus",
    "SolverBackend",
    "VarId",
    "VarKind",
    "Variable",
    "build_model",
    "default_big_m",
    "extract_reconstruction",
    "feasibility_witness",
    "lp_relax_solve",
    "nearest_endpoints",
    "solve",
    "write_lp",
]
