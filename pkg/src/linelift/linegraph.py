"""Line graph construction: labeled segments, candidate intersections, weights.

Vertices are Manhattan-labeled 2D line segments; edges are candidate
intersections between segments with different labels, found after
extending every segment by a fixed pixel amount on both sides. Each
edge carries a junction class (L/T/Y/X/HIGHER) derived from the half-rays
incident to its intersection point, and a weight looked up from a
configurable table.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from .config import DEFAULT_JUNCTION_WEIGHTS, PipelineConfig
from .geometry import Direction, Point2H

MIN_SEGMENT_LENGTH_PX = 10.0


class JunctionClass(enum.Enum):
    """Classification of an image point by its incident half-rays."""

    L = "L"
    T = "T"
    Y = "Y"
    X = "X"
    HIGHER = "HIGHER"


@dataclass(frozen=True)
class LineSegment2D:
    """A detected 2D segment with its Manhattan direction label."""

    id: int
    p1: Point2H
    p2: Point2H
    direction: Direction

    def __post_init__(self):
        if self.p1.xy() == self.p2.xy():
            raise ValueError(f"segment {self.id} has coincident endpoints")

    @property
    def length(self) -> float:
        (x1, y1), (x2, y2) = self.p1.xy(), self.p2.xy()
        return math.hypot(x2 - x1, y2 - y1)

    def endpoints(self) -> np.ndarray:
        return np.array([self.p1.xy(), self.p2.xy()])

    def unit(self) -> np.ndarray:
        e = self.endpoints()
        d = e[1] - e[0]
        return d / np.linalg.norm(d)

    def midpoint(self) -> np.ndarray:
        return self.endpoints().mean(axis=0)


@dataclass(frozen=True)
class IntersectionEdge:
    """Candidate intersection between two differently-labeled segments."""

    i: int
    j: int
    point: Point2H
    junction: JunctionClass | None = None
    weight: float = 1.0

    def __post_init__(self):
        if self.i >= self.j:
            raise ValueError("edge endpoints must satisfy i < j")

    @property
    def key(self) -> tuple[int, int]:
        return (self.i, self.j)


@dataclass
class LineGraph:
    """Vertices (segments) and candidate-intersection edges.

    Edges are kept in canonical (i, j)-sorted order; the position of an
    edge in `edges` is its edge id, used by the constraints, MILP, and
    MST modules.
    """

    vertices: list[LineSegment2D]
    edges: list[IntersectionEdge]

    def __post_init__(self):
        ids = [v.id for v in self.vertices]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate vertex ids")
        self.vertices = sorted(self.vertices, key=lambda v: v.id)
        self.edges = sorted(self.edges, key=lambda e: e.key)
        keys = [e.key for e in self.edges]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate edges")
        known = set(ids)
        by_id = {v.id: v for v in self.vertices}
        for e in self.edges:
            if e.i not in known or e.j not in known:
                raise ValueError(f"edge {e.key} references unknown vertex")
            if by_id[e.i].direction is by_id[e.j].direction:
                raise ValueError(f"edge {e.key} joins two {by_id[e.i].direction.value}-lines")
        self._by_id = by_id

    def vertex(self, vid: int) -> LineSegment2D:
        return self._by_id[vid]

    def adjacency(self) -> dict[int, list[tuple[int, int]]]:
        """vertex id -> sorted list of (neighbor id, edge id)."""
        adj: dict[int, list[tuple[int, int]]] = {v.id: [] for v in self.vertices}
        for eid, e in enumerate(self.edges):
            adj[e.i].append((e.j, eid))
            adj[e.j].append((e.i, eid))
        for lst in adj.values():
            lst.sort()
        return adj

    def edge_index(self) -> dict[tuple[int, int], int]:
        return {e.key: eid for eid, e in enumerate(self.edges)}


def extend_segment(line: LineSegment2D, pixels: float) -> LineSegment2D:
    """Move both endpoints outward along the segment direction by `pixels`.

    The midpoint and direction are unchanged.
    """
    if pixels < 0:
        raise ValueError("extension must be nonnegative")
    u = line.unit()
    (x1, y1), (x2, y2) = line.p1.xy(), line.p2.xy()
    return replace(
        line,
        p1=Point2H.from_xy(x1 - pixels * u[0], y1 - pixels * u[1]),
        p2=Point2H.from_xy(x2 + pixels * u[0], y2 + pixels * u[1]),
    )


def _segment_arrays(lines: list[LineSegment2D], extension_px: float):
    p1 = np.array([ln.p1.xy() for ln in lines])
    p2 = np.array([ln.p2.xy() for ln in lines])
    d = p2 - p1
    u = d / np.linalg.norm(d, axis=1, keepdims=True)
    e1 = p1 - extension_px * u
    e2 = p2 + extension_px * u
    return e1, e2


def find_candidate_intersections(lines: list[LineSegment2D],
                                 extension_px: float) -> list[IntersectionEdge]:
    """All crossings of extended segments whose direction labels differ.

    One edge per unordered pair, with the 2D intersection point recorded.
    Junction class and weight are filled in by `build_line_graph`.
    """
    n = len(lines)
    if n < 2:
        return []
    e1, e2 = _segment_arrays(lines, extension_px)
    labels = np.array([ln.direction.index for ln in lines])
    ii, jj = np.triu_indices(n, 1)
    mask = labels[ii] != labels[jj]
    ii, jj = ii[mask], jj[mask]

    d1 = e2[ii] - e1[ii]
    d2 = e2[jj] - e1[jj]
    rhs = e1[jj] - e1[ii]
    denom = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    ok = np.abs(denom) > 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (rhs[:, 0] * d2[:, 1] - rhs[:, 1] * d2[:, 0]) / denom
        s = (rhs[:, 0] * d1[:, 1] - rhs[:, 1] * d1[:, 0]) / denom
    ok &= (t >= 0.0) & (t <= 1.0) & (s >= 0.0) & (s <= 1.0)

    pts = e1[ii] + t[:, None] * d1
    edges = []
    for k in np.flatnonzero(ok):
        a, b = int(ii[k]), int(jj[k])
        va, vb = lines[a].id, lines[b].id
        if va > vb:
            va, vb = vb, va
        edges.append(IntersectionEdge(va, vb, Point2H.from_xy(pts[k, 0], pts[k, 1])))
    edges.sort(key=lambda e: e.key)
    return edges


def _dedupe_pairs(edges: list[IntersectionEdge],
                  lines_by_id: dict[int, LineSegment2D]) -> list[IntersectionEdge]:
    """Collapse duplicate intersections of one pair to the point nearest both midpoints."""
    best: dict[tuple[int, int], IntersectionEdge] = {}
    for e in edges:
        prev = best.get(e.key)
        if prev is None:
            best[e.key] = e
            continue
        mi = lines_by_id[e.i].midpoint()
        mj = lines_by_id[e.j].midpoint()

        def cost(edge):
            p = np.array(edge.point.xy())
            return float(np.linalg.norm(p - mi) + np.linalg.norm(p - mj))

        if cost(e) < cost(prev):
            best[e.key] = e
    return [best[k] for k in sorted(best)]


def _incident_rays(point: np.ndarray, segments: list[LineSegment2D],
                   radius_px: float, angle_tol_deg: float) -> list[np.ndarray]:
    """Distinct unit half-ray directions leaving `point` along the segments.

    A segment contributes a ray for each side of the point on which it has
    material beyond `radius_px`; rays closer than the angular tolerance are
    merged.
    """
    rays: list[np.ndarray] = []
    cos_tol = math.cos(math.radians(angle_tol_deg))
    for seg in segments:
        u = seg.unit()
        t1 = float(np.dot(seg.endpoints()[0] - point, u))
        t2 = float(np.dot(seg.endpoints()[1] - point, u))
        lo, hi = min(t1, t2), max(t1, t2)
        for direction, extent in ((u, hi), (-u, -lo)):
            if extent > radius_px:
                if not any(float(np.dot(direction, r)) > cos_tol for r in rays):
                    rays.append(direction)
    return rays


def classify_and_weight(point: Point2H, segments: list[LineSegment2D],
                        weights: dict[str, float] | None = None,
                        radius_px: float = 5.0,
                        angle_tol_deg: float = 2.0) -> tuple[JunctionClass, float]:
    """Junction class from the count/arrangement of incident half-rays.

    2 rays -> L; 3 rays with an anti-parallel pair -> T; 3 rays pairwise
    non-collinear -> Y; 4 rays -> X; 5 or more -> HIGHER.
    """
    weights = weights or DEFAULT_JUNCTION_WEIGHTS
    rays = _incident_rays(np.array(point.xy()), segments, radius_px, angle_tol_deg)
    n = len(rays)
    cos_tol = math.cos(math.radians(angle_tol_deg))
    if n <= 2:
        kind = JunctionClass.L
    elif n == 3:
        collinear = any(
            float(np.dot(rays[a], rays[b])) < -cos_tol
            for a in range(3) for b in range(a + 1, 3))
        kind = JunctionClass.T if collinear else JunctionClass.Y
    elif n == 4:
        kind = JunctionClass.X
    else:
        kind = JunctionClass.HIGHER
    return kind, float(weights[kind.value])


def _cluster_points(points: np.ndarray, radius_px: float) -> list[list[int]]:
    """Union of all point pairs within radius, as sorted clusters."""
    n = len(points)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    if n > 1:
        tree = cKDTree(points)
        for a, b in sorted(tree.query_pairs(radius_px)):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    clusters: dict[int, list[int]] = {}
    for idx in range(n):
        clusters.setdefault(find(idx), []).append(idx)
    return [clusters[root] for root in sorted(clusters)]


def build_line_graph(lines: list[LineSegment2D],
                     config: PipelineConfig | None = None) -> LineGraph:
    """Assemble the weighted line graph from labeled segments.

    Candidate intersections of extended segments become edges; nearby
    intersection points are clustered into junctions and every edge of a
    junction receives that junction's class and weight.
    """
    config = config or PipelineConfig()
    kept = [ln for ln in lines if ln.length >= config.min_segment_length_px]
    by_id = {ln.id: ln for ln in kept}
    raw = find_candidate_intersections(kept, config.extension_px)
    raw = _dedupe_pairs(raw, by_id)
    if not raw:
        return LineGraph(vertices=kept, edges=[])

    points = np.array([e.point.xy() for e in raw])
    final: list[IntersectionEdge] = []
    for cluster in _cluster_points(points, config.junction_radius_px):
        centroid = Point2H.from_xy(*points[cluster].mean(axis=0))
        seg_ids = sorted({vid for idx in cluster for vid in raw[idx].key})
        kind, weight = classify_and_weight(
            centroid, [by_id[v] for v in seg_ids],
            weights=config.junction_weights,
            radius_px=config.junction_radius_px,
            angle_tol_deg=config.junction_angle_tol_deg)
        for idx in cluster:
            final.append(replace(raw[idx], junction=kind, weight=weight))
    return LineGraph(vertices=kept, edges=final)


def connected_components(g: LineGraph) -> list[list[int]]:
    """Vertex-id components, each sorted, ordered by (-size, min id)."""
    adj = g.adjacency()
    seen: set[int] = set()
    comps: list[list[int]] = []
    for start in sorted(adj):
        if start in seen:
            continue
        stack, comp = [start], []
        seen.add(start)
        while stack:
            v = stack.pop()
            comp.append(v)
            for nb, _ in adj[v]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        comps.append(sorted(comp))
    comps.sort(key=lambda c: (-len(c), c[0]))
    return comps


def largest_connected_component(g: LineGraph) -> LineGraph:
    """Induced subgraph on the largest component (ties: smallest min id)."""
    comps = connected_components(g)
    if not comps:
        return LineGraph(vertices=[], edges=[])
    keep = set(comps[0])
    return LineGraph(
        vertices=[v for v in g.vertices if v.id in keep],
        edges=[e for e in g.edges if e.i in keep and e.j in keep],
    )
