"""MST extraction, accuracy metrics, and the constraint-ablation harness.

The spanning tree prefers solver-selected real edges: edge sort key is
(1 - b, -junction weight, edge id), Kruskal with union-find. Accuracy is
the fraction of MST edges whose ground-truth label is real; the mean
accuracy pools counts across instances, the normalized accuracy averages
per-instance fractions.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from . import milp
from .config import PipelineConfig
from .constraints import ConstraintSet, generate_constraints
from .errors import DisconnectedGraphError
from .geometry import backproject
from .linegraph import LineGraph, build_line_graph, largest_connected_component
from .pipeline import model_params, resolve_labels
from .sceneio import SceneInstance


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, a):
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def minimum_spanning_tree(g: LineGraph,
                          decisions: dict[tuple[int, int], int]) -> list[int]:
    """Edge ids of the minimum spanning tree of a connected line graph.

    `decisions` maps edge keys to solved boolean values; the weight key is
    (1 - b, -w, edge id), so real-decided, heavily-weighted edges are
    taken first, with a deterministic final tiebreak.
    """
    if not g.vertices:
        return []
    order = sorted(
        range(len(g.edges)),
        key=lambda eid: (1 - decisions[g.edges[eid].key],
                         -g.edges[eid].weight, eid))
    uf = _UnionFind([v.id for v in g.vertices])
    tree = []
    for eid in order:
        e = g.edges[eid]
        if uf.union(e.i, e.j):
            tree.append(eid)
    if len(tree) != len(g.vertices) - 1:
        raise DisconnectedGraphError(
            "graph is not connected; pass the largest connected component")
    return sorted(tree)


def mst_real_counts(g: LineGraph, decisions: dict[tuple[int, int], int],
                    labels: dict[tuple[int, int], bool]) -> tuple[int, int]:
    """(real MST edges, total MST edges) for one instance."""
    tree = minimum_spanning_tree(g, decisions)
    n_real = 0
    for eid in tree:
        key = g.edges[eid].key
        if key not in labels:
            raise KeyError(f"MST edge {key} has no ground-truth label")
        n_real += int(labels[key])
    return n_real, len(tree)


@dataclass
class AccuracyReport:
    """Pooled and per-instance MST accuracy."""

    per_instance: list[tuple[int, int]] = field(default_factory=list)

    @property
    def mean_acc(self) -> float:
        total = sum(n for _, n in self.per_instance)
        return sum(r for r, _ in self.per_instance) / total if total else 0.0

    @property
    def norm_acc(self) -> float:
        fracs = [r / n for r, n in self.per_instance if n]
        return sum(fracs) / len(fracs) if fracs else 0.0


def score(counts) -> AccuracyReport:
    """Aggregate (n_real, n_total) pairs into the two accuracy metrics."""
    report = AccuracyReport()
    for n_real, n_total in counts:
        if not 0 <= n_real <= n_total:
            raise ValueError(f"bad counts ({n_real}, {n_total})")
        report.per_instance.append((int(n_real), int(n_total)))
    return report


@dataclass(frozen=True)
class AblationConfig:
    """Which constraint families participate; baseline has none."""

    cycles: bool = False
    planarity: bool = False
    boundary: bool = False

    @property
    def label(self) -> str:
        if not (self.cycles or self.planarity or self.boundary):
            return "Baseline"
        parts = [letter for flag, letter in
                 ((self.boundary, "B"), (self.cycles, "C"), (self.planarity, "P"))
                 if flag]
        if len(parts) == 1:
            return {"B": "Boundary (B)", "C": "Cycles (C)",
                    "P": "Planarity (P)"}[parts[0]]
        return " + ".join(parts)


ALL_ABLATION_CONFIGS = (
    AblationConfig(),
    AblationConfig(boundary=True),
    AblationConfig(cycles=True),
    AblationConfig(planarity=True),
    AblationConfig(boundary=True, cycles=True),
    AblationConfig(boundary=True, planarity=True),
    AblationConfig(cycles=True, planarity=True),
    AblationConfig(boundary=True, cycles=True, planarity=True),
)


@dataclass
class AblationRow:
    config: AblationConfig
    report: AccuracyReport


def _prepared(instance: SceneInstance, config: PipelineConfig):
    rot, segments = resolve_labels(instance, config)
    graph = build_line_graph(segments, config)
    component = largest_connected_component(graph)
    rays = {(v.id, a): backproject(instance.camera, rot, p)
            for v in component.vertices for a, p in ((1, v.p1), (2, v.p2))}
    full = generate_constraints(component, planarity_gate_px=config.planarity_gate_px)
    return component, rays, full


def evaluate_instances(instances: list[tuple[SceneInstance, dict[tuple[int, int], bool]]],
                       config: PipelineConfig,
                       ablation: AblationConfig | None = None) -> AccuracyReport:
    """Reconstruct every instance under one configuration and score it."""
    flags = ablation or AblationConfig(cycles=config.use_cycles,
                                       planarity=config.use_planarity,
                                       boundary=config.use_boundary)
    counts = []
    for instance, labels in instances:
        component, rays, full = _prepared(instance, config)
        counts.append(_solve_and_count(component, rays, full, flags, config, labels))
    return score(counts)


def _solve_and_count(component, rays, full: ConstraintSet, flags: AblationConfig,
                     config: PipelineConfig, labels) -> tuple[int, int]:
    cons = ConstraintSet(
        cycles=full.cycles if flags.cycles else [],
        planarity=full.planarity if flags.planarity else type(full.planarity)(),
        boundary=full.boundary if flags.boundary else type(full.boundary)())
    model = milp.build_model(component, rays, cons,
                             params=model_params(config, rays),
                             strict_eq4=config.strict_eq4)
    solution = milp.solve(model, workers=config.workers)
    decisions = {}
    bool_vars = [v for v in model.variables if v.vid.kind is milp.VarKind.B_EDGE]
    for e, var in zip(component.edges, bool_vars):
        decisions[e.key] = int(round(solution.values[var.vid]))
    return mst_real_counts(component, decisions, labels)


def run_ablation(instances: list[tuple[SceneInstance, dict[tuple[int, int], bool]]],
                 config: PipelineConfig,
                 configs=ALL_ABLATION_CONFIGS) -> list[AblationRow]:
    """One accuracy row per constraint configuration, shared preprocessing.

    The graph, rays, and full constraint enumeration are computed once
    per instance; each configuration reuses subsets of them, so every row
    sees identical inputs and solver parameters.
    """
    prepared = [(_prepared(inst, config), labels) for inst, labels in instances]
    rows = []
    for flags in configs:
        counts = []
        for (component, rays, full), labels in prepared:
            counts.append(_solve_and_count(component, rays, full, flags,
                                           config, labels))
        rows.append(AblationRow(config=flags, report=score(counts)))
    return rows


def ablation_csv(rows: list[AblationRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["Method", "Mean Acc. %", "Norm. Acc. %"])
    for row in rows:
        writer.writerow([row.config.label,
                         f"{row.report.mean_acc * 100:.4f}",
                         f"{row.report.norm_acc * 100:.4f}"])
    return buf.getvalue()


def ablation_table(rows: list[AblationRow]) -> str:
    width = max(len(r.config.label) for r in rows)
    lines = [f"{'Method':<{width}}  Mean Acc. %  Norm. Acc. %"]
    lines.append("-" * len(lines[0]))
    for row in rows:
        lines.append(f"{row.config.label:<{width}}  "
                     f"{row.report.mean_acc * 100:>11.4f}  "
                     f"{row.report.norm_acc * 100:>12.4f}")
    return "\n".join(lines)
