"""Assemble the full reconstruction MILP from a line graph and its rays.

Per edge (i, j) with third axis a: two big-M rows force the a-components
of the chosen endpoint pair to coincide when b_ij = 1 (one shared slack).
Per vertex i and each non-true direction: two rows force the segment's
extent along that direction to zero (one slack per direction). Cycle,
planarity, and boundary rows come in symbolic form from the constraints
module and are resolved onto model variables here.

By default the big-M rows bind the endpoint pair nearest the 2D
intersection point; with the per-line direction rows active this pins the
intersection itself (the spec of a T-junction), unlike the literal
all-pairs form, which is available via strict_eq4 for comparison.
"""

from __future__ import annotations

import numpy as np

from ..constraints import BoundRef, BRef, ConstraintSet, PiRef
from ..errors import ModelBuildError
from ..geometry import Ray, third_axis
from ..linegraph import LineGraph
from .model import MilpModel, ModelParams, VarId, VarKind

RayTable = dict[tuple[int, int], Ray]  # (vertex id, endpoint 1|2) -> Ray


def default_big_m(rays: RayTable, lambda_max: float) -> float:
    max_comp = max((np.max(np.abs(r.array())) for r in rays.values()), default=1.0)
    return 2.0 * lambda_max * float(max_comp)


def nearest_endpoints(g: LineGraph, edge_idx: int) -> tuple[int, int]:
    """Endpoint indices (a, b) of the edge's lines nearest its 2D point."""
    edge = g.edges[edge_idx]
    q = np.array(edge.point.xy())

    def nearest(vid: int) -> int:
        pts = g.vertex(vid).endpoints()
        d = np.linalg.norm(pts - q, axis=1)
        return 1 if d[0] <= d[1] else 2

    return nearest(edge.i), nearest(edge.j)


def build_model(g: LineGraph, rays: RayTable, cons: ConstraintSet,
                params: ModelParams | None = None,
                weights_override: dict[tuple[int, int], float] | None = None,
                strict_eq4: bool = False) -> MilpModel:
    """Variables, rows, and objective of the full MILP."""
    params = params or ModelParams()
    for v in g.vertices:
        for a in (1, 2):
            if (v.id, a) not in rays:
                raise ModelBuildError(f"missing ray for vertex {v.id} endpoint {a}")
    if params.big_m == 0.0:
        params.big_m = default_big_m(rays, params.lambda_max)
    max_comp = max((np.max(np.abs(r.array())) for r in rays.values()), default=1.0)
    params.validate(max_ray_component=float(max_comp))

    model = MilpModel(params=params)
    big_m = params.big_m

    lam: dict[tuple[int, int], VarId] = {}
    for v in g.vertices:
        for a in (1, 2):
            lam[(v.id, a)] = model.add_variable(
                VarKind.LAMBDA, 1.0, params.lambda_max, False, f"lam_{v.id}_{a}")

    vertex_slack: dict[tuple[int, int], VarId] = {}
    if params.enable_slacks:
        for v in g.vertices:
            for beta in v.direction.others():
                vertex_slack[(v.id, beta.index)] = model.add_variable(
                    VarKind.SLACK, 0.0, big_m, False, f"s_v_{v.id}_{beta.value}")

    b_vars: list[VarId] = []
    for e in g.edges:
        b_vars.append(model.add_variable(VarKind.B_EDGE, 0.0, 1.0, True,
                                         f"b_{e.i}_{e.j}"))
    edge_slack: dict[int, VarId] = {}
    if params.enable_slacks:
        for eid, e in enumerate(g.edges):
            edge_slack[eid] = model.add_variable(VarKind.SLACK, 0.0, big_m, False,
                                                 f"s_e_{e.i}_{e.j}")

    pi_vars: dict[PiRef, VarId] = {}
    for pair in cons.planarity.pairs:
        for ref in (pair.var_e, pair.var_f):
            pi_vars[ref] = model.add_variable(
                VarKind.PI, 0.0, 1.0, True,
                f"pi_{ref.k}_{ref.l}_{ref.axis.value}")
    bd_vars: dict[BoundRef, VarId] = {}
    for bv in cons.boundary.variables:
        bd_vars[bv.var] = model.add_variable(VarKind.B_BOUNDARY, 0.0, 1.0, True,
                                             f"B_{bv.i}")

    # per-line direction rows: zero extent along non-true directions
    for v in g.vertices:
        for beta in v.direction.others():
            d1 = rays[(v.id, 1)].array()[beta.index]
            d2 = rays[(v.id, 2)].array()[beta.index]
            terms = [(lam[(v.id, 1)], d1), (lam[(v.id, 2)], -d2)]
            sterm = ([(vertex_slack[(v.id, beta.index)], -1.0)]
                     if params.enable_slacks else [])
            model.add_constraint(terms + sterm, "<=", 0.0,
                                 f"dir_p_{v.id}_{beta.value}")
            neg = [(vid, -c) for vid, c in terms]
            model.add_constraint(neg + sterm, "<=", 0.0,
                                 f"dir_n_{v.id}_{beta.value}")

    # per-edge big-M rows on the third axis; each row uses the tightest
    # valid constant, lambda_max * (|d_ia,a| + |d_jb,a|), the sup of the
    # row expression over the lambda box (never above the global big-M)
    dirs = {v.id: v.direction for v in g.vertices}
    for eid, e in enumerate(g.edges):
        alpha = third_axis(dirs[e.i], dirs[e.j])
        if strict_eq4:
            pairs = [(a, b) for a in (1, 2) for b in (1, 2)]
        else:
            pairs = [nearest_endpoints(g, eid)]
        for a, b in pairs:
            da = rays[(e.i, a)].array()[alpha.index]
            db = rays[(e.j, b)].array()[alpha.index]
            row_m = min(big_m, params.lambda_max * (abs(da) + abs(db)))
            terms = [(lam[(e.i, a)], da), (lam[(e.j, b)], -db),
                     (b_vars[eid], row_m)]
            sterm = [(edge_slack[eid], -1.0)] if params.enable_slacks else []
            suffix = f"{e.i}_{e.j}" + (f"_{a}{b}" if strict_eq4 else "")
            model.add_constraint(terms + sterm, "<=", row_m, f"meet_p_{suffix}")
            neg = [(lam[(e.i, a)], -da), (lam[(e.j, b)], db), (b_vars[eid], row_m)]
            model.add_constraint(neg + sterm, "<=", row_m, f"meet_n_{suffix}")

    # symbolic rows from the constraints module
    def resolve(ref) -> VarId:
        if isinstance(ref, BRef):
            return b_vars[ref.edge]
        if isinstance(ref, PiRef):
            return pi_vars[ref]
        if isinstance(ref, BoundRef):
            return bd_vars[ref]
        raise ModelBuildError(f"unknown symbolic reference {ref!r}")

    symbolic = ([c.as_symbolic() for c in cons.cycles]
                + cons.planarity.constraints + cons.boundary.constraints)
    for sc in symbolic:
        try:
            terms = [(resolve(ref), coef) for ref, coef in sc.terms]
        except (KeyError, IndexError) as exc:
            raise ModelBuildError(f"row {sc.name!r} references unknown variable: {exc}")
        model.add_constraint(terms, sc.sense, sc.rhs, sc.name)

    # objective: sum(w b) + mu1 sum(pi) + mu2 sum(1 - B) - mu_s sum(slack)
    for eid, e in enumerate(g.edges):
        w = e.weight
        if weights_override and e.key in weights_override:
            w = weights_override[e.key]
        model.add_objective(b_vars[eid], w)
    for ref in cons.planarity.objective_refs:
        model.add_objective(pi_vars[ref], params.mu1)
    for ref in cons.boundary.objective_refs:
        model.add_objective(bd_vars[ref], -params.mu2)
    model.objective_offset = params.mu2 * cons.boundary.offset_count
    for vid in list(vertex_slack.values()) + list(edge_slack.values()):
        model.add_objective(vid, -params.slack_penalty)

    model.validate()
    return model
