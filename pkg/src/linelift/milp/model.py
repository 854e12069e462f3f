"""MILP model container: variables, linear rows, objective, parameters.

Models are always maximization. Boolean variables have bounds [0, 1] and
integrality; depth multipliers (lambda) live in [1, lambda_max]; slack
variables live in [0, L] where L is the big-M constant (no feasible point
ever needs more slack than L, so the finite cap loses nothing and keeps
every LP relaxation bounded).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from ..errors import ModelBuildError


class VarKind(enum.Enum):
    LAMBDA = "lambda"
    SLACK = "slack"
    B_EDGE = "b"
    PI = "pi"
    B_BOUNDARY = "B"


@dataclass(frozen=True)
class VarId:
    index: int
    kind: VarKind


@dataclass
class Variable:
    vid: VarId
    lb: float
    ub: float
    integral: bool
    name: str


@dataclass(frozen=True)
class LinearConstraint:
    """sum(coef * var) <sense> rhs, sense one of '<=', '=', '>='."""

    terms: tuple[tuple[VarId, float], ...]
    sense: str
    rhs: float
    name: str = ""

    def __post_init__(self):
        if self.sense not in ("<=", "=", ">="):
            raise ModelBuildError(f"bad constraint sense {self.sense!r}")
        seen = set()
        for vid, coef in self.terms:
            if vid in seen:
                raise ModelBuildError(f"duplicate variable {vid} in row {self.name!r}")
            seen.add(vid)
            if not math.isfinite(coef):
                raise ModelBuildError(f"non-finite coefficient in row {self.name!r}")


@dataclass
class ModelParams:
    """Tuned scalars of the full MILP."""

    big_m: float = 2e4
    mu1: float = 0.5
    mu2: float = 10.0
    slack_penalty: float = 10.0
    lambda_max: float = 1e4
    time_budget_s: float = 300.0
    mip_gap: float = 1e-6
    enable_slacks: bool = True
    #: deterministic search cutoff (node count), unlike the wall-clock
    #: budget; 0 means unlimited
    max_nodes: int = 0

    def validate(self, max_ray_component: float = 1.0) -> None:
        if self.big_m < 2.0 * self.lambda_max * max_ray_component:
            raise ModelBuildError(
                "big-M constant too small: must be at least "
                "2 * lambda_max * max ray component")
        if min(self.mu1, self.mu2, self.slack_penalty) < 0:
            raise ModelBuildError("objective weights must be nonnegative")
        if self.time_budget_s <= 0:
            raise ModelBuildError("time budget must be positive")


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    BUDGET_INCUMBENT = "budget_incumbent"
    INFEASIBLE = "infeasible"


@dataclass
class Solution:
    values: dict[VarId, float]
    objective: float
    status: SolveStatus
    bound: float
    solve_time: float
    nodes: int = 0

    def value(self, vid: VarId) -> float:
        return self.values[vid]


@dataclass
class MilpModel:
    variables: list[Variable] = field(default_factory=list)
    constraints: list[LinearConstraint] = field(default_factory=list)
    objective: list[tuple[VarId, float]] = field(default_factory=list)
    objective_offset: float = 0.0
    params: ModelParams = field(default_factory=ModelParams)

    def add_variable(self, kind: VarKind, lb: float, ub: float,
                     integral: bool, name: str) -> VarId:
        vid = VarId(len(self.variables), kind)
        self.variables.append(Variable(vid, lb, ub, integral, name))
        return vid

    def add_constraint(self, terms, sense: str, rhs: float, name: str = "") -> None:
        self.constraints.append(LinearConstraint(tuple(terms), sense, rhs, name))

    def add_objective(self, vid: VarId, coef: float) -> None:
        self.objective.append((vid, coef))

    @property
    def booleans(self) -> list[Variable]:
        return [v for v in self.variables if v.integral]

    def validate(self) -> None:
        declared = {v.vid for v in self.variables}
        for v in self.variables:
            if v.lb > v.ub or not (math.isfinite(v.lb) and math.isfinite(v.ub)):
                raise ModelBuildError(f"variable {v.name} has bad bounds [{v.lb}, {v.ub}]")
            if v.integral and (v.lb < 0 or v.ub > 1):
                raise ModelBuildError(f"boolean {v.name} must have bounds within [0, 1]")
        for row in self.constraints:
            for vid, _ in row.terms:
                if vid not in declared:
                    raise ModelBuildError(f"row {row.name!r} references undeclared {vid}")
        obj_ids = [vid for vid, _ in self.objective]
        if len(set(obj_ids)) != len(obj_ids):
            raise ModelBuildError("duplicate variable in objective")
        for vid in obj_ids:
            if vid not in declared:
                raise ModelBuildError(f"objective references undeclared {vid}")

    def evaluate_objective(self, values: dict[VarId, float]) -> float:
        return self.objective_offset + sum(c * values[vid] for vid, c in self.objective)

    def constraint_violations(self, values: dict[VarId, float],
                              tol: float = 1e-9) -> list[tuple[str, float]]:
        """Rows violated by `values` (beyond tol), with their violations."""
        bad = []
        for row in self.constraints:
            lhs = sum(c * values[vid] for vid, c in row.terms)
            if row.sense == "<=":
                gap = lhs - row.rhs
            elif row.sense == ">=":
                gap = row.rhs - lhs
            else:
                gap = abs(lhs - row.rhs)
            if gap > tol:
                bad.append((row.name, gap))
        for v in self.variables:
            x = values[v.vid]
            if x < v.lb - tol or x > v.ub + tol:
                bad.append((f"bounds:{v.name}", max(v.lb - x, x - v.ub)))
        return bad


def feasibility_witness(model: MilpModel) -> dict[VarId, float]:
    """The all-zero-boolean point: booleans 0, lambdas at lower bound,
    slacks at the smallest value satisfying every row they appear in.

    Slack variables are assumed to enter rows with coefficient -1 (as the
    builder emits them), so each row gives a lower bound on its slack.
    """
    values = {v.vid: (0.0 if v.integral else v.lb) for v in model.variables}
    for v in model.variables:
        if v.vid.kind is VarKind.SLACK:
            values[v.vid] = 0.0
    for row in model.constraints:
        slack_ids = [vid for vid, c in row.terms if vid.kind is VarKind.SLACK]
        if not slack_ids:
            continue
        if len(slack_ids) > 1:
            raise ModelBuildError(f"row {row.name!r} has multiple slack variables")
        (sid,) = slack_ids
        coef = dict(row.terms)[sid]
        if coef != -1.0 or row.sense != "<=":
            raise ModelBuildError(f"row {row.name!r} uses slack unconventionally")
        rest = sum(c * values[vid] for vid, c in row.terms if vid != sid)
        values[sid] = max(values[sid], rest - row.rhs)
    return values


def write_lp(model: MilpModel, path: str) -> None:
    """Dump the model in the standard LP text format for external solvers.

    Maximization objective, Subject To rows, Bounds, Binaries sections.
    """
    def term_str(coef: float, name: str) -> str:
        sign = "+" if coef >= 0 else "-"
        return f"{sign} {abs(coef):.17g} {name}"

    names = {v.vid: v.name for v in model.variables}
    lines = ["Maximize", " obj:"]
    parts = [term_str(c, names[vid]) for vid, c in model.objective]
    if model.objective_offset:
        # LP format has no constant term; encode it via a fixed variable
        parts.append(term_str(model.objective_offset, "one"))
    lines.append("  " + " ".join(parts) if parts else "  0 one")
    lines.append("Subject To")
    sense_map = {"<=": "<=", ">=": ">=", "=": "="}
    for idx, row in enumerate(model.constraints):
        body = " ".join(term_str(c, names[vid]) for vid, c in row.terms)
        rname = row.name or f"c{idx}"
        lines.append(f" {rname}: {body} {sense_map[row.sense]} {row.rhs:.17g}")
    lines.append("Bounds")
    lines.append(" one = 1")
    for v in model.variables:
        lines.append(f" {v.lb:.17g} <= {v.name} <= {v.ub:.17g}")
    binaries = [v.name for v in model.variables if v.integral]
    if binaries:
        lines.append("Binaries")
        lines.append(" " + " ".join(binaries))
    lines.append("End")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
