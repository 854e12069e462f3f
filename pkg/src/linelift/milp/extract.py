"""Turn a solved model into 3D line endpoints.

Each endpoint is placed at lambda * d along its back-projected ray, then
the whole structure is rescaled so the smallest lambda equals 1 (the
canonical representative of the scale family).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..linegraph import LineGraph
from .build import RayTable
from .model import MilpModel, Solution, SolveStatus, VarKind


@dataclass
class Reconstruction:
    """3D endpoints per line of the largest connected component."""

    points: dict[tuple[int, int], np.ndarray]  # (vertex id, endpoint) -> xyz
    lambdas: dict[tuple[int, int], float]
    edge_decisions: dict[tuple[int, int], int]  # (i, j) -> 0/1
    component: list[int] = field(default_factory=list)
    status: SolveStatus = SolveStatus.OPTIMAL
    objective: float = 0.0

    def line(self, vid: int) -> tuple[np.ndarray, np.ndarray]:
        return self.points[(vid, 1)], self.points[(vid, 2)]


def extract_reconstruction(g: LineGraph, rays: RayTable, model: MilpModel,
                           sol: Solution) -> Reconstruction:
    """Scale-normalized 3D endpoints plus rounded edge decisions."""
    if sol.status is SolveStatus.INFEASIBLE:
        raise ValueError("cannot extract a reconstruction from an infeasible solve")

    lam_value = {}
    for var in model.variables:
        if var.vid.kind is VarKind.LAMBDA:
            vid, a = var.name.split("_")[1:]
            lam_value[(int(vid), int(a))] = sol.values[var.vid]
    lam_min = min(lam_value.values(), default=1.0)
    scale = 1.0 / lam_min if lam_min > 0 else 1.0

    points, lambdas = {}, {}
    for v in g.vertices:
        for a in (1, 2):
            lam = lam_value[(v.id, a)] * scale
            lambdas[(v.id, a)] = lam
            points[(v.id, a)] = lam * rays[(v.id, a)].array()

    decisions = {}
    for e, var in zip(g.edges, (v for v in model.variables if v.vid.kind is VarKind.B_EDGE)):
        decisions[e.key] = int(round(sol.values[var.vid]))

    return Reconstruction(points=points, lambdas=lambdas, edge_decisions=decisions,
                          component=[v.id for v in g.vertices],
                          status=sol.status, objective=sol.objective)
