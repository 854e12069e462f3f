import itertools

import numpy as np
import pytest

from linelift.config import PipelineConfig
from linelift.geometry import Direction, Point2H
from linelift.linegraph import (
    IntersectionEdge,
    JunctionClass,
    LineGraph,
    LineSegment2D,
    build_line_graph,
    classify_and_weight,
    connected_components,
    extend_segment,
    find_candidate_intersections,
    largest_connected_component,
)

from conftest import seg
from oracles import bfs_components

X, Y, Z = Direction.X, Direction.Y, Direction.Z


class TestExtendSegment:
    def test_axis_aligned(self):
        s = extend_segment(seg(0, 0, 0, 10, 0, X), 30)
        assert s.p1.xy() == (-30.0, 0.0)
        assert s.p2.xy() == (40.0, 0.0)

    def test_zero_extension_identity(self):
        s = seg(0, 3, 4, 9, 12, Y)
        e = extend_segment(s, 0)
        assert e.p1.xy() == s.p1.xy() and e.p2.xy() == s.p2.xy()

    def test_three_four_five(self):
        # unit vector (0.6, 0.8) times 5
        s = extend_segment(seg(0, 0, 0, 3, 4, Z), 5)
        assert np.allclose(s.p1.xy(), (-3.0, -4.0))
        assert np.allclose(s.p2.xy(), (6.0, 8.0))

    def test_midpoint_and_direction_preserved(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            x1, y1, x2, y2 = rng.uniform(-100, 100, 4)
            if abs(x2 - x1) + abs(y2 - y1) < 1:
                continue
            s = seg(0, x1, y1, x2, y2, X)
            e = extend_segment(s, rng.uniform(0, 50))
            assert np.allclose(e.midpoint(), s.midpoint(), atol=1e-9)
            assert np.allclose(e.unit(), s.unit(), atol=1e-12)
            assert e.direction is s.direction


class TestCandidateIntersections:
    def test_same_label_excluded(self):
        lines = [seg(0, 0, 0, 10, 10, X), seg(1, 0, 10, 10, 0, X)]
        assert find_candidate_intersections(lines, 30) == []

    def test_perpendicular_crossing(self):
        lines = [seg(0, 0, 0, 10, 0, X), seg(1, 5, -5, 5, 5, Y)]
        edges = find_candidate_intersections(lines, 0)
        assert len(edges) == 1
        assert edges[0].key == (0, 1)
        assert np.allclose(edges[0].point.xy(), (5.0, 0.0))

    def test_extension_reach(self):
        lines = [seg(0, 0, 0, 10, 0, X), seg(1, 35, -5, 35, 5, Y)]
        with_30 = find_candidate_intersections(lines, 30)
        assert len(with_30) == 1
        assert np.allclose(with_30[0].point.xy(), (35.0, 0.0))
        assert find_candidate_intersections(lines, 20) == []

    def test_order_invariance(self):
        rng = np.random.default_rng(5)
        lines = []
        for i in range(12):
            x, y = rng.uniform(0, 100, 2)
            dx, dy = rng.uniform(-40, 40, 2)
            lines.append(seg(i, x, y, x + dx + 15, y + dy + 15,
                             (X, Y, Z)[i % 3]))
        base = {e.key for e in find_candidate_intersections(lines, 10)}
        for _ in range(5):
            perm = list(rng.permutation(len(lines)))
            shuffled = [lines[p] for p in perm]
            assert {e.key for e in find_candidate_intersections(shuffled, 10)} == base


class TestClassifyAndWeight:
    def test_two_terminating_is_l(self):
        segs = [seg(0, 50, 50, 90, 50, X), seg(1, 50, 50, 50, 90, Y)]
        kind, w = classify_and_weight(Point2H.from_xy(50, 50), segs)
        assert kind is JunctionClass.L
        assert w > 0

    def test_pass_through_plus_terminating_is_t(self):
        segs = [seg(0, 10, 50, 90, 50, X), seg(1, 50, 50, 50, 90, Y)]
        kind, _ = classify_and_weight(Point2H.from_xy(50, 50), segs)
        assert kind is JunctionClass.T

    def test_three_corner_rays_is_y(self):
        # synthetic box corner: three segments of three labels terminating
        segs = [seg(0, 50, 50, 90, 55, X), seg(1, 50, 50, 45, 90, Y),
                seg(2, 50, 50, 20, 25, Z)]
        kind, _ = classify_and_weight(Point2H.from_xy(50, 50), segs)
        assert kind is JunctionClass.Y

    def test_two_passing_is_x(self):
        segs = [seg(0, 10, 50, 90, 50, X), seg(1, 50, 10, 50, 90, Y)]
        kind, _ = classify_and_weight(Point2H.from_xy(50, 50), segs)
        assert kind is JunctionClass.X

    def test_five_rays_is_higher(self):
        segs = [seg(0, 10, 50, 90, 50, X), seg(1, 50, 10, 50, 90, Y),
                seg(2, 50, 50, 90, 90, Z)]
        kind, _ = classify_and_weight(Point2H.from_xy(50, 50), segs)
        assert kind is JunctionClass.HIGHER

    def test_weight_table_lookup(self):
        table = {"L": 1.0, "T": 2.0, "Y": 3.0, "X": 4.0, "HIGHER": 5.0}
        segs = [seg(0, 50, 50, 90, 50, X), seg(1, 50, 50, 50, 90, Y)]
        _, w = classify_and_weight(Point2H.from_xy(50, 50), segs, weights=table)
        assert w == 1.0


def _fig3_cuboid():
    """Hand-drawn cuboid sketch: 9 segments, oblique z direction."""
    lines = [
        seg(0, 100, 100, 300, 100, X),   # front top
        seg(1, 100, 250, 300, 250, X),   # front bottom
        seg(2, 100, 100, 100, 250, Y),   # front left
        seg(3, 300, 100, 300, 250, Y),   # front right
        seg(4, 100, 100, 160, 60, Z),    # depth top-left
        seg(5, 300, 100, 360, 60, Z),    # depth top-right
        seg(6, 300, 250, 360, 210, Z),   # depth bottom-right
        seg(7, 160, 60, 360, 60, X),     # back top
        seg(8, 360, 60, 360, 210, Y),    # back right
    ]
    expected_corners = {
        (0, 2), (0, 3), (1, 2), (1, 3),  # front face
        (0, 4), (2, 4),                   # top-left corner
        (0, 5), (3, 5),                   # top-right corner
        (1, 6), (3, 6),                   # bottom-right corner
        (4, 7), (5, 7), (5, 8), (7, 8),   # back corners
        (6, 8),                           # back bottom-right
    }
    return lines, expected_corners


class TestBuildLineGraph:
    def test_fig3_cuboid_sketch(self):
        lines, expected = _fig3_cuboid()
        config = PipelineConfig(extension_px=5.0)
        g = build_line_graph(lines, config)
        assert len(g.vertices) == 9
        got = {e.key for e in g.edges}
        assert expected <= got

    def test_empty(self):
        g = build_line_graph([], PipelineConfig())
        assert g.vertices == [] and g.edges == []

    def test_cube_contains_true_corners(self):
        from linelift import synth
        from linelift.linegraph import LineSegment2D

        instance, gt = synth.generate_scene(synth.preset("cube", 3))
        segs2d = [LineSegment2D(ln.id, ln.p1, ln.p2, ln.direction)
                  for ln in instance.lines]
        g = build_line_graph(segs2d, PipelineConfig())
        # 7 visible corners, every candidate edge real
        assert len(gt.real_meet_points()) == 7
        edge_keys = {e.key for e in g.edges}
        assert set(gt.edge_labels) == edge_keys

    def test_min_length_filter(self):
        lines = [seg(0, 0, 0, 5, 0, X), seg(1, 0, 0, 50, 0, X)]
        g = build_line_graph(lines, PipelineConfig())
        assert [v.id for v in g.vertices] == [1]

    def test_no_equal_direction_edges(self):
        rng = np.random.default_rng(11)
        lines = []
        for i in range(20):
            x, y = rng.uniform(0, 200, 2)
            dx, dy = rng.uniform(-60, 60, 2)
            lines.append(seg(i, x, y, x + dx + 12, y + dy + 12, (X, Y, Z)[i % 3]))
        g = build_line_graph(lines, PipelineConfig())
        for e in g.edges:
            assert g.vertex(e.i).direction is not g.vertex(e.j).direction

    def test_duplicate_pair_collapsed(self):
        lines, _ = _fig3_cuboid()
        g = build_line_graph(lines, PipelineConfig(extension_px=30.0))
        keys = [e.key for e in g.edges]
        assert len(keys) == len(set(keys))


class TestLargestConnectedComponent:
    def _edge(self, i, j):
        return IntersectionEdge(i, j, Point2H.from_xy(0, 0),
                                JunctionClass.L, 1.0)

    def _graph(self, n, edges):
        verts = [seg(i, 10.0 * i, 0, 10.0 * i + 20, 15, (X, Y, Z)[i % 3])
                 for i in range(n)]
        return LineGraph(vertices=verts,
                         edges=[self._edge(i, j) for i, j in edges])

    def test_connected_graph_is_itself(self):
        g = self._graph(4, [(0, 1), (1, 2), (2, 3)])
        c = largest_connected_component(g)
        assert [v.id for v in c.vertices] == [0, 1, 2, 3]
        assert len(c.edges) == 3

    def test_five_beats_three(self):
        g = self._graph(8, [(0, 1), (1, 2), (2, 3), (3, 4), (5, 6), (6, 7)])
        c = largest_connected_component(g)
        assert [v.id for v in c.vertices] == [0, 1, 2, 3, 4]

    def test_two_cubes_scene(self):
        # two separated cubes, 9 lines each, one extra line on the first
        edges = []
        for base in (0, 9):
            for k in range(8):
                edges.append((base + k, base + k + 1))
        edges.append((1, 18))  # extra line attached to the first cube
        g = self._graph(19, edges)
        c = largest_connected_component(g)
        assert [v.id for v in c.vertices] == list(range(9)) + [18]

    def test_tie_broken_by_smallest_min_id(self):
        g = self._graph(6, [(3, 4), (4, 5), (0, 1), (1, 2)])
        c = largest_connected_component(g)
        assert [v.id for v in c.vertices] == [0, 1, 2]

    def test_component_maximal_against_bfs_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            n = int(rng.integers(2, 15))
            possible = [(i, j) for i in range(n) for j in range(i + 1, n)
                        if (X, Y, Z)[i % 3] is not (X, Y, Z)[j % 3]]
            chosen = [p for p in possible if rng.random() < 0.2]
            g = self._graph(n, chosen)
            comps = bfs_components(list(range(n)), chosen)
            biggest = max(comps, key=lambda c: (len(c), -c[0]))
            got = largest_connected_component(g)
            assert [v.id for v in got.vertices] == biggest
            assert connected_components(g)[0] == biggest
