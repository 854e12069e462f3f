"""LP relaxation solves backed by scipy's HiGHS interface.

The model is converted once into cached sparse arrays; branch-and-bound
nodes then only override variable bounds, so per-node solve overhead is
one `linprog` call. Maximization is handled by negating the objective.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix

from .model import MilpModel, Solution, SolveStatus, VarId


class LpStatus(enum.Enum):
    OPTIMAL = 0
    INFEASIBLE = 1
    FAILED = 2  # numerical trouble; caller treats the bound as +inf


@dataclass
class LpResult:
    status: LpStatus
    x: np.ndarray | None
    objective: float  # in maximization sense, includes the model offset
    dual_ineq: np.ndarray | None = None
    dual_eq: np.ndarray | None = None
    dual_lower: np.ndarray | None = None
    dual_upper: np.ndarray | None = None


class LpArrays:
    """Sparse-array form of a model, reusable across bound overrides."""

    def __init__(self, model: MilpModel):
        self.model = model
        n = len(model.variables)
        self.n = n
        self.c_max = np.zeros(n)
        for vid, coef in model.objective:
            self.c_max[vid.index] += coef
        self.offset = model.objective_offset
        self.lb = np.array([v.lb for v in model.variables])
        self.ub = np.array([v.ub for v in model.variables])
        self.integral = np.array([v.integral for v in model.variables])

        ub_rows, eq_rows = [], []
        ub_rhs, eq_rhs = [], []
        for row in model.constraints:
            cols = [vid.index for vid, _ in row.terms]
            coefs = [c for _, c in row.terms]
            if row.sense == "<=":
                ub_rows.append((cols, coefs))
                ub_rhs.append(row.rhs)
            elif row.sense == ">=":
                ub_rows.append((cols, [-c for c in coefs]))
                ub_rhs.append(-row.rhs)
            else:
                eq_rows.append((cols, coefs))
                eq_rhs.append(row.rhs)

        self.a_ub = self._build(ub_rows, n)
        self.b_ub = np.array(ub_rhs)
        self.a_eq = self._build(eq_rows, n)
        self.b_eq = np.array(eq_rhs)

    @staticmethod
    def _build(rows, n) -> csr_matrix | None:
        if not rows:
            return None
        data, indices, indptr = [], [], [0]
        for cols, coefs in rows:
            indices.extend(cols)
            data.extend(coefs)
            indptr.append(len(indices))
        return csr_matrix((data, indices, indptr), shape=(len(rows), n))

    def solve(self, lb: np.ndarray | None = None,
              ub: np.ndarray | None = None) -> LpResult:
        lb = self.lb if lb is None else lb
        ub = self.ub if ub is None else ub
        res = linprog(
            -self.c_max,
            A_ub=self.a_ub, b_ub=self.b_ub if self.a_ub is not None else None,
            A_eq=self.a_eq, b_eq=self.b_eq if self.a_eq is not None else None,
            bounds=np.column_stack([lb, ub]),
            method="highs",
        )
        if res.status == 0:
            return LpResult(
                status=LpStatus.OPTIMAL, x=res.x,
                objective=float(-res.fun) + self.offset,
                dual_ineq=None if res.ineqlin is None else np.asarray(res.ineqlin.marginals),
                dual_eq=None if res.eqlin is None else np.asarray(res.eqlin.marginals),
                dual_lower=np.asarray(res.lower.marginals),
                dual_upper=np.asarray(res.upper.marginals),
            )
        if res.status == 2:
            return LpResult(status=LpStatus.INFEASIBLE, x=None, objective=-np.inf)
        return LpResult(status=LpStatus.FAILED, x=None, objective=np.inf)

    def values_dict(self, x: np.ndarray) -> dict[VarId, float]:
        return {v.vid: float(x[v.vid.index]) for v in self.model.variables}


def lp_relax_solve(model: MilpModel) -> Solution:
    """Solve the LP relaxation (integrality dropped) of a bounded model."""
    model.validate()
    arrays = LpArrays(model)
    res = arrays.solve()
    if res.status is LpStatus.INFEASIBLE:
        return Solution(values={}, objective=-np.inf,
                        status=SolveStatus.INFEASIBLE, bound=-np.inf, solve_time=0.0)
    if res.status is LpStatus.FAILED:
        raise ArithmeticError("LP relaxation failed numerically")
    return Solution(values=arrays.values_dict(res.x), objective=res.objective,
                    status=SolveStatus.OPTIMAL, bound=res.objective, solve_time=0.0)


def dual_feasibility_residual(arrays: LpArrays, res: LpResult) -> float:
    """KKT stationarity residual of a solved LP, in the minimization form.

    HiGHS marginals satisfy c_min = A_ub^T y_ub + A_eq^T y_eq + y_lb + y_ub
    at an optimal basic solution; the residual measures how far the
    returned duals are from that identity.
    """
    grad = -arrays.c_max.copy()
    if arrays.a_ub is not None and res.dual_ineq is not None:
        grad -= arrays.a_ub.T @ res.dual_ineq
    if arrays.a_eq is not None and res.dual_eq is not None:
        grad -= arrays.a_eq.T @ res.dual_eq
    if res.dual_lower is not None:
        grad -= res.dual_lower
    if res.dual_upper is not None:
        grad -= res.dual_upper
    return float(np.max(np.abs(grad))) if len(grad) else 0.0
