"""End-to-end reconstruction: label, graph, component, MILP, back-project.

When the instance carries direction labels, vanishing-point estimation is
bypassed entirely (the rotation comes from the instance or is fit from
the labeled lines); otherwise RANSAC estimation runs with the configured
seed and labels every segment, dropping those beyond the tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import milp
from .config import PipelineConfig
from .constraints import ConstraintSet, generate_constraints
from .geometry import (
    WorldRotation,
    backproject,
    estimate_vanishing_points,
    label_direction,
    rotation_from_labeled_lines,
    vanishing_points_from_rotation,
)
from .linegraph import LineGraph, LineSegment2D, build_line_graph, largest_connected_component
from .sceneio import SceneInstance


@dataclass
class PipelineResult:
    rotation: WorldRotation
    graph: LineGraph
    component: LineGraph
    rays: milp.RayTable
    constraints: ConstraintSet
    model: milp.MilpModel
    solution: milp.Solution
    reconstruction: milp.Reconstruction


def resolve_labels(instance: SceneInstance,
                   config: PipelineConfig) -> tuple[WorldRotation, list[LineSegment2D]]:
    """Rotation plus labeled segments, estimating only what is missing."""
    if instance.fully_labeled:
        rot = instance.rotation
        if rot is None:
            rot = rotation_from_labeled_lines(instance.lines, instance.camera)
        segments = [LineSegment2D(ln.id, ln.p1, ln.p2, ln.direction)
                    for ln in instance.lines]
        return rot, segments

    if instance.rotation is not None:
        rot = instance.rotation
        vps = vanishing_points_from_rotation(rot, instance.camera)
    else:
        vps, rot = estimate_vanishing_points(
            instance.lines, instance.camera, config.seed,
            ortho_tol_deg=config.vp_ortho_tol_deg)
    segments = []
    for ln in instance.lines:
        direction = ln.direction
        if direction is None:
            direction = label_direction(ln, vps, tol_deg=config.label_tol_deg)
        if direction is None:
            continue  # unlabeled segments stay out of the graph
        segments.append(LineSegment2D(ln.id, ln.p1, ln.p2, direction))
    return rot, segments


def model_params(config: PipelineConfig, rays: milp.RayTable) -> milp.ModelParams:
    return milp.ModelParams(
        big_m=milp.default_big_m(rays, config.lambda_max),
        mu1=config.mu1, mu2=config.mu2,
        slack_penalty=config.slack_penalty,
        lambda_max=config.lambda_max,
        time_budget_s=config.time_budget_s,
        mip_gap=config.mip_gap,
        enable_slacks=config.enable_slacks)


def reconstruct_instance(instance: SceneInstance,
                         config: PipelineConfig | None = None,
                         backend: milp.SolverBackend | None = None) -> PipelineResult:
    config = config or PipelineConfig()
    rot, segments = resolve_labels(instance, config)
    graph = build_line_graph(segments, config)
    component = largest_connected_component(graph)
    rays = {(v.id, a): backproject(instance.camera, rot, p)
            for v in component.vertices
            for a, p in ((1, v.p1), (2, v.p2))}
    cons = generate_constraints(
        component,
        use_cycles=config.use_cycles,
        use_planarity=config.use_planarity,
        use_boundary=config.use_boundary,
        planarity_gate_px=config.planarity_gate_px)
    model = milp.build_model(component, rays, cons,
                             params=model_params(config, rays),
                             strict_eq4=config.strict_eq4)
    solution = milp.solve(model, backend=backend, workers=config.workers)
    reconstruction = milp.extract_reconstruction(component, rays, model, solution)
    return PipelineResult(rotation=rot, graph=graph, component=component,
                          rays=rays, constraints=cons, model=model,
                          solution=solution, reconstruction=reconstruction)
