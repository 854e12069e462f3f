"""Bundled branch-and-bound over the LP relaxation.

Best-bound node selection with early termination on a wall-clock budget.
Branching prefers the most contested intersection boolean: the LP shaves
edge booleans fractionally just below 1 to dodge their big-M rows at
negligible objective cost, so plain most-fractional branching stalls;
picking the edge with the largest shaved objective value (coefficient
times distance from 1) resolves the truly contested decisions first. A
one-shot rounding of the root relaxation (feasible whenever slacks are
enabled) provides a strong initial incumbent. Fully deterministic for
workers = 1; with workers > 1 child LPs of a batch are solved in threads,
the returned objective is identical but tie-broken variable values may
differ.
"""

from __future__ import annotations

import heapq
import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .lp import LpArrays, LpStatus
from .model import MilpModel, Solution, SolveStatus, VarKind, feasibility_witness

INTEGRALITY_TOL = 1e-6


class SolverBackend(Protocol):
    """Anything that can solve a MilpModel; external engines plug in here."""

    def solve(self, model: MilpModel) -> Solution: ...


@dataclass
class _Node:
    bound: float
    seq: int
    lb: np.ndarray
    ub: np.ndarray
    x: np.ndarray
    lp_ok: bool

    def heap_key(self):
        return (-self.bound, self.seq)


class BranchAndBound:
    """Default solver backend: LP-based best-bound branch and bound."""

    def __init__(self, workers: int = 1):
        self.workers = max(1, int(workers))

    def solve(self, model: MilpModel) -> Solution:
        model.validate()
        params = model.params
        t0 = time.monotonic()
        deadline = t0 + params.time_budget_s
        arrays = LpArrays(model)
        bool_cols = np.flatnonzero(arrays.integral)
        edge_bool = np.array([v.integral and v.vid.kind is VarKind.B_EDGE
                              for v in model.variables])
        obj_coef = arrays.c_max

        incumbent_x: np.ndarray | None = None
        incumbent_obj = -np.inf
        if params.enable_slacks:
            witness = feasibility_witness(model)
            incumbent_x = np.array([witness[v.vid] for v in model.variables])
            incumbent_obj = float(arrays.c_max @ incumbent_x) + arrays.offset

        seq = itertools.count()
        heap: list = []
        root = arrays.solve()
        if root.status is LpStatus.INFEASIBLE:
            if incumbent_x is None:
                return Solution(values={}, objective=-np.inf,
                                status=SolveStatus.INFEASIBLE, bound=-np.inf,
                                solve_time=time.monotonic() - t0, nodes=0)
        else:
            node = self._make_node(root, arrays.lb.copy(), arrays.ub.copy(), seq)
            heapq.heappush(heap, (node.heap_key(), node))
            if node.lp_ok and len(bool_cols):
                rx, robj = self._dive_incumbent(arrays, bool_cols, edge_bool,
                                                obj_coef, node.x)
                if rx is not None and robj > incumbent_obj:
                    incumbent_x, incumbent_obj = rx, robj

        def abs_gap() -> float:
            return params.mip_gap * max(1.0, abs(incumbent_obj))

        nodes = 0
        pool = ThreadPoolExecutor(self.workers) if self.workers > 1 else None
        try:
            while heap:
                out_of_nodes = params.max_nodes and nodes >= params.max_nodes
                if time.monotonic() > deadline or out_of_nodes:
                    bound = max(incumbent_obj, heap[0][1].bound)
                    return self._finish(model, arrays, incumbent_x, incumbent_obj,
                                        SolveStatus.BUDGET_INCUMBENT, bound, t0,
                                        nodes)
                batch: list[_Node] = []
                while heap and len(batch) < self.workers:
                    batch.append(heapq.heappop(heap)[1])
                    nodes += 1

                children: list[tuple[np.ndarray, np.ndarray]] = []
                for node in batch:
                    if node.bound <= incumbent_obj + abs_gap():
                        continue  # fathomed by bound
                    frac = np.abs(node.x[bool_cols] - np.round(node.x[bool_cols]))
                    if frac.size == 0 or np.max(frac) <= INTEGRALITY_TOL:
                        if node.lp_ok:
                            obj = float(arrays.c_max @ node.x) + arrays.offset
                            if obj > incumbent_obj:
                                incumbent_obj, incumbent_x = obj, node.x
                        continue
                    col = self._branch_column(node.x, bool_cols, edge_bool, obj_coef)
                    for fix in (0.0, 1.0):
                        lb, ub = node.lb.copy(), node.ub.copy()
                        lb[col] = ub[col] = fix
                        children.append((lb, ub))

                if children:
                    if pool is not None:
                        results = list(pool.map(
                            lambda b: arrays.solve(lb=b[0], ub=b[1]), children))
                    else:
                        results = [arrays.solve(lb=lb, ub=ub) for lb, ub in children]
                    for (lb, ub), res in zip(children, results):
                        if res.status is LpStatus.INFEASIBLE:
                            continue
                        child = self._make_node(res, lb, ub, seq)
                        if child.bound <= incumbent_obj + abs_gap():
                            continue
                        heapq.heappush(heap, (child.heap_key(), child))
        finally:
            if pool is not None:
                pool.shutdown()

        return self._finish(model, arrays, incumbent_x, incumbent_obj,
                            SolveStatus.OPTIMAL, incumbent_obj, t0, nodes)

    @staticmethod
    def _branch_column(x, bool_cols, edge_bool, obj_coef) -> int:
        """Pick the boolean column to branch on.

        Fractional intersection booleans are ranked by shaved objective
        value, coefficient * (1 - x): the LP pays almost nothing to pull
        a contested edge just below 1, so distance from integrality says
        little while the shaved value identifies the decisions that move
        the bound. Other booleans (plane/boundary) are only branched when
        every edge boolean is integral, ranked most-fractional.
        """
        frac = np.abs(x[bool_cols] - np.round(x[bool_cols]))
        cand = bool_cols[frac > INTEGRALITY_TOL]
        edges = cand[edge_bool[cand]]
        if len(edges):
            score = obj_coef[edges] * (1.0 - x[edges])
            order = np.lexsort((edges, -score))
            return int(edges[order[0]])
        dist = np.abs(x[cand] - np.round(x[cand]))
        order = np.lexsort((cand, -np.abs(obj_coef[cand]), -dist))
        return int(cand[order[0]])

    def _dive_incumbent(self, arrays, bool_cols, edge_bool, obj_coef, x_root,
                        max_lps: int = 60):
        """Greedy rounding dive from the root relaxation.

        Rounds one contested boolean at a time (the usual branch choice),
        re-solving the LP after each fix and flipping a fix that turns
        out infeasible (rounding can violate boolean-only rows such as
        cycle bounds, so one-shot rounding is not enough). Returns an
        integral incumbent or (None, -inf).
        """
        lb, ub = arrays.lb.copy(), arrays.ub.copy()
        x = x_root
        for _ in range(max_lps):
            frac = np.abs(x[bool_cols] - np.round(x[bool_cols]))
            if np.max(frac, initial=0.0) <= INTEGRALITY_TOL:
                lb2, ub2 = lb.copy(), ub.copy()
                rounded = np.round(x[bool_cols])
                lb2[bool_cols] = rounded
                ub2[bool_cols] = rounded
                res = arrays.solve(lb=lb2, ub=ub2)
                if res.status is LpStatus.OPTIMAL:
                    return res.x, res.objective
                return None, -np.inf
            col = self._branch_column(x, bool_cols, edge_bool, obj_coef)
            fix = float(round(x[col]))
            lb[col] = ub[col] = fix
            res = arrays.solve(lb=lb, ub=ub)
            if res.status is not LpStatus.OPTIMAL:
                lb[col] = ub[col] = 1.0 - fix
                res = arrays.solve(lb=lb, ub=ub)
                if res.status is not LpStatus.OPTIMAL:
                    return None, -np.inf
            x = res.x
        return None, -np.inf

    @staticmethod
    def _make_node(res, lb, ub, seq) -> _Node:
        if res.status is LpStatus.OPTIMAL:
            return _Node(res.objective, next(seq), lb, ub, res.x, lp_ok=True)
        # numerical failure: conservative bound, midpoint x keeps unfixed
        # booleans fractional so the node is branched, never made incumbent
        mid = (lb + np.minimum(ub, lb + 1.0)) / 2.0
        return _Node(np.inf, next(seq), lb, ub, mid, lp_ok=False)

    @staticmethod
    def _finish(model, arrays, x, obj, status, bound, t0, nodes=0) -> Solution:
        if x is None:
            return Solution(values={}, objective=-np.inf,
                            status=SolveStatus.INFEASIBLE, bound=bound,
                            solve_time=time.monotonic() - t0, nodes=nodes)
        values = arrays.values_dict(x)
        # snap near-integral booleans exactly onto {0, 1}, then re-evaluate so
        # the reported objective is attained by the reported values
        for v in model.variables:
            if v.integral:
                values[v.vid] = float(round(values[v.vid]))
        objective = model.evaluate_objective(values)
        return Solution(values=values, objective=objective, status=status,
                        bound=float(max(bound, objective)),
                        solve_time=time.monotonic() - t0, nodes=nodes)


def solve(model: MilpModel, backend: SolverBackend | None = None,
          workers: int = 1) -> Solution:
    """Solve a model with the given backend (default: bundled B&B)."""
    backend = backend or BranchAndBound(workers=workers)
    return backend.solve(model)
