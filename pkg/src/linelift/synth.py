"""Synthetic Manhattan scenes with exact ground truth.

Scenes are axis-aligned boxes (plus optional zero-thickness walls) whose
face coordinates live on an integer lattice. This makes ground-truth
intersection labels exact: a candidate edge is real iff the two lines'
shared-perpendicular-axis lattice coordinates are equal, and every fake
edge's world-space gap is at least one lattice step, which is kept at or
above the labeling margin. The world frame has y vertical and the camera
at the origin (scene coordinates are translated by the camera position),
so instances match the back-projection convention everywhere else.

spurious_rate injects round(rate * n) extra lines that cross existing
segments in 2D but are displaced off the lattice planes of their partner
in 3D, i.e. guaranteed-fake crossing pairs.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .config import PipelineConfig
from .errors import SceneGenerationError
from .geometry import CameraIntrinsics, Direction, Point2H, WorldRotation
from .linegraph import LineSegment2D, build_line_graph, find_candidate_intersections
from .sceneio import SCHEMA_VERSION, InstanceLine, SceneInstance, _dump, _load

_VIS_SAMPLES = 33
_NEAR = 1e-6


@dataclass
class SceneSpec:
    """Everything that determines one synthetic scene (per rng_seed)."""

    num_boxes: int = 1
    box_size_range: tuple[int, int] = (2, 4)  # lattice steps per dimension
    num_walls: int = 0
    wall_size_range: tuple[int, int] = (3, 8)
    region_extent: int = 8  # lattice steps per axis
    cam_distance_factor: tuple[float, float] = (2.2, 2.8)  # x scene radius
    cam_elevation_deg: tuple[float, float] = (20.0, 45.0)
    noise_px: float = 0.0
    spurious_rate: float = 0.0
    dropout_rate: float = 0.0
    rng_seed: int = 0
    margin_frac: float = 0.05
    image_width: int = 1600
    image_height: int = 1200
    focal_px: float = 1200.0
    extension_px: float = 30.0  # extension used for ground-truth labeling
    min_visible_lines: int = 6
    max_attempts: int = 200

    def __post_init__(self):
        for rate in (self.spurious_rate, self.dropout_rate):
            if not 0.0 <= rate <= 1.0:
                raise ValueError("rates must lie in [0, 1]")
        if self.noise_px < 0:
            raise ValueError("noise must be nonnegative")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SceneSpec":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown scene spec keys: {sorted(unknown)}")
        coerced = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
        return cls(**coerced)


@dataclass
class WorldSegment:
    """A 3D segment in the camera-origin world frame."""

    id: int
    a: np.ndarray
    b: np.ndarray
    direction: Direction


@dataclass
class GroundTruth:
    """Exact 3D endpoints and real/fake labels for one instance."""

    points: dict[int, tuple[np.ndarray, np.ndarray]]  # line id -> (P1, P2)
    directions: dict[int, Direction]
    const_coords: dict[int, dict[int, int]]  # line id -> axis index -> lattice int
    edge_labels: dict[tuple[int, int], bool]
    margin: float
    extension_px: float

    def real_meet_points(self) -> list[tuple[int, int, int]]:
        """Distinct lattice meet points of real-labeled candidate edges."""
        pts = set()
        for (i, j), real in self.edge_labels.items():
            if not real:
                continue
            coords = {}
            coords.update(self.const_coords[i])
            coords.update(self.const_coords[j])
            pts.add((coords[0], coords[1], coords[2]))
        return sorted(pts)


@dataclass
class _Box:
    lo: np.ndarray  # int lattice corner
    hi: np.ndarray

    @property
    def solid(self) -> bool:
        return bool(np.all(self.hi > self.lo))

    def edges(self) -> list[tuple[np.ndarray, np.ndarray, Direction]]:
        out = []
        for axis in range(3):
            if self.hi[axis] == self.lo[axis]:
                continue
            others = [k for k in range(3) if k != axis]
            for c0 in (self.lo[others[0]], self.hi[others[0]]):
                for c1 in (self.lo[others[1]], self.hi[others[1]]):
                    a = np.zeros(3, dtype=int)
                    b = np.zeros(3, dtype=int)
                    a[axis], b[axis] = self.lo[axis], self.hi[axis]
                    a[others[0]] = b[others[0]] = c0
                    a[others[1]] = b[others[1]] = c1
                    out.append((a, b, Direction.from_index(axis)))
        # zero-thickness dimensions duplicate edges; keep each once
        seen = set()
        dedup = []
        for a, b, d in out:
            key = (tuple(a), tuple(b), d)
            if key not in seen:
                seen.add(key)
                dedup.append((a, b, d))
        return dedup


def _boxes_overlap(a: _Box, b: _Box) -> bool:
    return bool(np.all(np.minimum(a.hi, b.hi) > np.maximum(a.lo, b.lo)))


def _sample_boxes(spec: SceneSpec, rng: np.random.Generator) -> list[_Box]:
    boxes: list[_Box] = []
    lo_s, hi_s = spec.box_size_range
    for _ in range(spec.num_boxes):
        for _attempt in range(60):
            size = rng.integers(lo_s, hi_s + 1, size=3)
            lo = np.array([
                rng.integers(0, max(1, spec.region_extent - size[0] + 1)),
                0,  # boxes stand on the ground plane
                rng.integers(0, max(1, spec.region_extent - size[2] + 1)),
            ])
            box = _Box(lo=lo, hi=lo + size)
            if not any(_boxes_overlap(box, other) for other in boxes):
                boxes.append(box)
                break
        else:
            raise SceneGenerationError("could not place boxes without overlap")
    lo_w, hi_w = spec.wall_size_range
    for _ in range(spec.num_walls):
        for _attempt in range(60):
            thin_axis = 0 if rng.random() < 0.5 else 2
            span_axis = 2 - thin_axis
            length = int(rng.integers(lo_w, hi_w + 1))
            height = int(rng.integers(2, max(3, hi_w // 2 + 2)))
            lo = np.zeros(3, dtype=int)
            hi = np.zeros(3, dtype=int)
            lo[thin_axis] = hi[thin_axis] = rng.integers(0, spec.region_extent + 1)
            lo[span_axis] = rng.integers(0, max(1, spec.region_extent - length + 1))
            hi[span_axis] = lo[span_axis] + length
            lo[1], hi[1] = 0, height
            wall = _Box(lo=lo, hi=hi)
            if not any(_boxes_overlap(wall, other) for other in boxes):
                boxes.append(wall)
                break
        else:
            raise SceneGenerationError("could not place walls without overlap")
    return boxes


def _sample_camera(spec: SceneSpec, boxes: list[_Box], rng: np.random.Generator):
    """Camera position (scene frame), rotation, and intrinsics."""
    lo = np.min([b.lo for b in boxes], axis=0).astype(float)
    hi = np.max([b.hi for b in boxes], axis=0).astype(float)
    center = (lo + hi) / 2.0
    radius = float(np.linalg.norm(hi - lo)) / 2.0

    quadrant = int(rng.integers(0, 4))
    azimuth = math.radians(90.0 * quadrant + rng.uniform(25.0, 65.0))
    elevation = math.radians(rng.uniform(*spec.cam_elevation_deg))
    distance = radius * rng.uniform(*spec.cam_distance_factor)
    direction = np.array([
        math.cos(elevation) * math.cos(azimuth),
        math.sin(elevation),
        math.cos(elevation) * math.sin(azimuth),
    ])
    cam_pos = center + distance * direction
    target = center + rng.uniform(-0.05, 0.05, size=3) * radius

    z_c = target - cam_pos
    z_c /= np.linalg.norm(z_c)
    up = np.array([0.0, 1.0, 0.0])
    x_c = np.cross(up, z_c)
    x_c /= np.linalg.norm(x_c)
    y_c = np.cross(z_c, x_c)
    roll = math.radians(rng.uniform(-10.0, 10.0))
    x_c, y_c = (math.cos(roll) * x_c + math.sin(roll) * y_c,
                -math.sin(roll) * x_c + math.cos(roll) * y_c)
    rot = WorldRotation(np.vstack([x_c, y_c, z_c]))

    k = np.array([
        [spec.focal_px, 0.0, spec.image_width / 2.0],
        [0.0, spec.focal_px, spec.image_height / 2.0],
        [0.0, 0.0, 1.0],
    ])
    cam = CameraIntrinsics(k=k, width=spec.image_width, height=spec.image_height)
    return cam_pos, rot, cam


def _slab_intervals(origin: np.ndarray, pts: np.ndarray, box: _Box):
    """Ray-parameter interval [t0, t1] where origin->pt crosses the box."""
    d = pts - origin
    t0 = np.full(len(pts), -np.inf)
    t1 = np.full(len(pts), np.inf)
    for axis in range(3):
        da = d[:, axis]
        lo, hi = float(box.lo[axis]), float(box.hi[axis])
        parallel = np.abs(da) < 1e-12
        with np.errstate(divide="ignore", invalid="ignore"):
            ta = (lo - origin[axis]) / da
            tb = (hi - origin[axis]) / da
        lo_t = np.minimum(ta, tb)
        hi_t = np.maximum(ta, tb)
        inside = (origin[axis] >= lo) & (origin[axis] <= hi)
        lo_t = np.where(parallel, np.where(inside, -np.inf, np.inf), lo_t)
        hi_t = np.where(parallel, np.where(inside, np.inf, -np.inf), hi_t)
        t0 = np.maximum(t0, lo_t)
        t1 = np.minimum(t1, hi_t)
    return t0, t1


def _occluded(cam_pos: np.ndarray, pts: np.ndarray, occluders: list[_Box]) -> np.ndarray:
    """True where a solid box blocks the open ray from the camera to a point."""
    delta = 1e-6
    blocked = np.zeros(len(pts), dtype=bool)
    for box in occluders:
        t0, t1 = _slab_intervals(cam_pos, pts, box)
        overlap = np.minimum(t1, 1.0 - delta) - np.maximum(t0, delta)
        blocked |= overlap > delta
    return blocked


def _longest_visible_run(visible: np.ndarray) -> tuple[int, int] | None:
    best, cur_start, best_span = None, None, 0
    for idx, v in enumerate(visible):
        if v and cur_start is None:
            cur_start = idx
        if (not v or idx == len(visible) - 1) and cur_start is not None:
            end = idx if v else idx - 1
            if end - cur_start > best_span or best is None:
                best, best_span = (cur_start, end), end - cur_start
            cur_start = None
    return best


def _clip_to_frustum(a: np.ndarray, b: np.ndarray, cam: CameraIntrinsics,
                     rot: WorldRotation, near: float = _NEAR):
    """Clip a camera-origin-world 3D segment to the viewing frustum.

    Each frustum face is linear in the segment parameter because the
    homogeneous image coordinates are affine in it. Returns clipped 3D
    endpoints or None when nothing remains.
    """
    m = cam.k @ rot.r
    ha, hb = m @ a, m @ b
    lo_t, hi_t = 0.0, 1.0
    conds = [
        (ha[2] - near, hb[2] - near),                                     # w >= near
        (ha[0], hb[0]),                                                   # u >= 0
        (cam.width * ha[2] - ha[0], cam.width * hb[2] - hb[0]),           # u <= W
        (ha[1], hb[1]),                                                   # v >= 0
        (cam.height * ha[2] - ha[1], cam.height * hb[2] - hb[1]),         # v <= H
    ]
    for fa, fb in conds:
        # f(t) = fa + t (fb - fa) >= 0
        if abs(fb - fa) < 1e-15:
            if fa < 0:
                return None
            continue
        t_cross = fa / (fa - fb)
        if fb > fa:
            lo_t = max(lo_t, t_cross)
        else:
            hi_t = min(hi_t, t_cross)
    if hi_t - lo_t < 1e-9:
        return None
    return a + lo_t * (b - a), a + hi_t * (b - a)


def project_point(p_world: np.ndarray, cam: CameraIntrinsics,
                  rot: WorldRotation) -> Point2H:
    h = cam.k @ (rot.r @ p_world)
    if h[2] <= 0:
        raise SceneGenerationError("point is not in front of the camera")
    return Point2H.from_xy(h[0] / h[2], h[1] / h[2])


def project_scene(segments: list[WorldSegment], cam: CameraIntrinsics,
                  rot: WorldRotation, near: float = _NEAR,
                  ) -> list[LineSegment2D]:
    """Project camera-origin-world segments to labeled 2D segments.

    Segments crossing the near plane are clipped at it; segments entirely
    behind the camera are dropped.
    """
    out = []
    m = cam.k @ rot.r
    for seg in segments:
        ha, hb = m @ seg.a, m @ seg.b
        a, b = seg.a, seg.b
        if ha[2] < near and hb[2] < near:
            continue
        if ha[2] < near or hb[2] < near:
            t = (near - ha[2]) / (hb[2] - ha[2])
            if ha[2] < near:
                a = a + t * (b - a)
            else:
                b = seg.a + t * (seg.b - seg.a)
        pa = project_point(a, cam, rot)
        pb = project_point(b, cam, rot)
        out.append(LineSegment2D(id=seg.id, p1=pa, p2=pb, direction=seg.direction))
    return out


@dataclass
class _Candidate:
    """A line surviving the visibility/clipping stages, before ids exist."""

    a3: np.ndarray  # scene frame
    b3: np.ndarray
    direction: Direction
    consts: dict[int, int]


def _visible_candidates(boxes: list[_Box], cam_pos: np.ndarray,
                        cam: CameraIntrinsics, rot: WorldRotation) -> list[_Candidate]:
    occluders = [b for b in boxes if b.solid]
    seen_edges = set()
    out = []
    ts = np.linspace(0.0, 1.0, _VIS_SAMPLES)
    for box in boxes:
        for a, b, direction in box.edges():
            key = (tuple(a), tuple(b), direction)
            if key in seen_edges:
                continue
            seen_edges.add(key)
            pts = a[None, :] + ts[:, None] * (b - a)[None, :]
            vis = ~_occluded(cam_pos, pts.astype(float), occluders)
            run = _longest_visible_run(vis)
            if run is None or run[1] - run[0] < 3:
                continue
            a3 = a + ts[run[0]] * (b - a)
            b3 = a + ts[run[1]] * (b - a)
            clipped = _clip_to_frustum(a3 - cam_pos, b3 - cam_pos, cam, rot)
            if clipped is None:
                continue
            consts = {axis: int(a[axis]) for axis in range(3)
                      if axis != direction.index}
            out.append(_Candidate(a3=clipped[0] + cam_pos, b3=clipped[1] + cam_pos,
                                  direction=direction, consts=consts))
    return out


def _crosses_in_2d(cand: _Candidate, partner: _Candidate, cam_pos: np.ndarray,
                   cam: CameraIntrinsics, rot: WorldRotation,
                   extension_px: float) -> bool:
    segs = []
    for lid, c in enumerate((cand, partner)):
        try:
            pa = project_point(c.a3 - cam_pos, cam, rot)
            pb = project_point(c.b3 - cam_pos, cam, rot)
        except SceneGenerationError:
            return False
        segs.append(LineSegment2D(id=lid, p1=pa, p2=pb, direction=c.direction))
    return bool(find_candidate_intersections(segs, extension_px))


def _spurious_candidates(count: int, kept: list[_Candidate], cam_pos: np.ndarray,
                         cam: CameraIntrinsics, rot: WorldRotation,
                         spec: SceneSpec,
                         rng: np.random.Generator) -> list[_Candidate]:
    out = []
    for _ in range(count):
        for _try in range(12):
            partner = kept[int(rng.integers(0, len(kept)))]
            tau = rng.uniform(0.3, 0.7)
            anchor = partner.a3 + tau * (partner.b3 - partner.a3)
            rho = rng.uniform(0.55, 1.7)
            if abs(rho - 1.0) < 0.2:
                continue
            q = cam_pos + rho * (anchor - cam_pos)
            axis_options = [d for d in Direction if d is not partner.direction]
            direction = axis_options[int(rng.integers(0, 2))]
            consts = {}
            ok = True
            for axis in range(3):
                if axis == direction.index:
                    continue
                snapped = int(round(q[axis]))
                snapped = max(0, min(spec.region_extent, snapped))
                if axis in partner.consts and snapped == partner.consts[axis]:
                    snapped += 1 if snapped < spec.region_extent else -1
                if axis in partner.consts and snapped == partner.consts[axis]:
                    ok = False
                consts[axis] = snapped
            if not ok:
                continue
            half = rng.uniform(1.0, 2.5)
            a3 = q.copy()
            b3 = q.copy()
            for axis, value in consts.items():
                a3[axis] = b3[axis] = float(value)
            a3[direction.index] -= half
            b3[direction.index] += half
            clipped = _clip_to_frustum(a3 - cam_pos, b3 - cam_pos, cam, rot)
            if clipped is None:
                continue
            cand = _Candidate(a3=clipped[0] + cam_pos, b3=clipped[1] + cam_pos,
                              direction=direction, consts=consts)
            if not _crosses_in_2d(cand, partner, cam_pos, cam, rot,
                                  spec.extension_px):
                continue
            out.append(cand)
            break
    return out


def _label_edges(lines_2d: list[LineSegment2D], consts: dict[int, dict[int, int]],
                 extension_px: float) -> dict[tuple[int, int], bool]:
    config = PipelineConfig(extension_px=extension_px)
    graph = build_line_graph(lines_2d, config)
    labels = {}
    dirs = {v.id: v.direction for v in graph.vertices}
    for e in graph.edges:
        alpha = ({0, 1, 2} - {dirs[e.i].index, dirs[e.j].index}).pop()
        labels[e.key] = consts[e.i][alpha] == consts[e.j][alpha]
    return labels


def generate_scene(spec: SceneSpec) -> tuple[SceneInstance, GroundTruth]:
    """Deterministically generate one instance plus its ground truth.

    Retries with sub-seeds when a sampled camera sees too little geometry,
    and, for fully clean specs (no noise, dropout, or spurious lines),
    until no coincidental fake crossing survives, so that clean instances
    satisfy the all-candidates-real soundness property.
    """
    clean = spec.noise_px == 0 and spec.spurious_rate == 0 and spec.dropout_rate == 0
    last_reason = "no attempts made"
    for attempt in range(spec.max_attempts):
        rng = np.random.default_rng([spec.rng_seed, attempt])
        try:
            result = _generate_once(spec, rng, clean)
        except SceneGenerationError as exc:
            last_reason = str(exc)
            continue
        if result is not None:
            return result
        last_reason = "clean spec produced a coincidental fake crossing"
    raise SceneGenerationError(
        f"gave up after {spec.max_attempts} attempts: {last_reason}")


def _generate_once(spec: SceneSpec, rng: np.random.Generator, clean: bool):
    boxes = _sample_boxes(spec, rng)
    diameter = float(np.linalg.norm(
        np.max([b.hi for b in boxes], axis=0) - np.min([b.lo for b in boxes], axis=0)))
    margin = spec.margin_frac * diameter
    if margin > 1.0:
        raise SceneGenerationError(
            "margin exceeds the lattice step; reduce margin_frac or region_extent")
    cam_pos, rot, cam = _sample_camera(spec, boxes, rng)

    candidates = _visible_candidates(boxes, cam_pos, cam, rot)
    keep_draws = rng.random(len(candidates))
    kept = [c for c, draw in zip(candidates, keep_draws)
            if draw >= spec.dropout_rate]
    if len(kept) < spec.min_visible_lines:
        raise SceneGenerationError("camera sees too little geometry")

    n_spurious = int(round(spec.spurious_rate * len(kept)))
    spurious = _spurious_candidates(n_spurious, kept, cam_pos, cam, rot, spec, rng)
    all_cands = kept + spurious

    instance_lines: list[InstanceLine] = []
    gt_points: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    gt_dirs: dict[int, Direction] = {}
    gt_consts: dict[int, dict[int, int]] = {}
    lines_2d: list[LineSegment2D] = []
    next_id = 0
    for cand in all_cands:
        a_w, b_w = cand.a3 - cam_pos, cand.b3 - cam_pos
        pa = project_point(a_w, cam, rot)
        pb = project_point(b_w, cam, rot)
        (ua, va), (ub, vb) = pa.xy(), pb.xy()
        if spec.noise_px > 0:
            ua, va, ub, vb = (
                coord + spec.noise_px * rng.standard_normal()
                for coord in (ua, va, ub, vb))
            ua, ub = np.clip([ua, ub], 0.0, cam.width)
            va, vb = np.clip([va, vb], 0.0, cam.height)
        if math.hypot(ub - ua, vb - va) < 10.0:
            continue
        lid = next_id
        next_id += 1
        p1, p2 = Point2H.from_xy(ua, va), Point2H.from_xy(ub, vb)
        instance_lines.append(InstanceLine(id=lid, p1=p1, p2=p2,
                                           direction=cand.direction))
        lines_2d.append(LineSegment2D(id=lid, p1=p1, p2=p2,
                                      direction=cand.direction))
        gt_points[lid] = (a_w, b_w)
        gt_dirs[lid] = cand.direction
        gt_consts[lid] = dict(cand.consts)

    if len(instance_lines) < spec.min_visible_lines:
        raise SceneGenerationError("too few segments after noise filtering")

    labels = _label_edges(lines_2d, gt_consts, spec.extension_px)
    if clean and not all(labels.values()):
        return None

    gt = GroundTruth(points=gt_points, directions=gt_dirs, const_coords=gt_consts,
                     edge_labels=labels, margin=margin,
                     extension_px=spec.extension_px)
    instance = SceneInstance(camera=cam, lines=instance_lines, rotation=rot,
                             gt_edges=dict(labels))
    return instance, gt


# ---------------------------------------------------------------------------
# presets and ground-truth serialization
# ---------------------------------------------------------------------------

PRESET_NAMES = ("cube", "clean", "noisy", "urban")


def preset(name: str, seed: int = 0) -> SceneSpec:
    """Named scene families used by the test and evaluation suites."""
    if name == "cube":
        return SceneSpec(num_boxes=1, box_size_range=(3, 3), region_extent=5,
                         rng_seed=seed)
    if name == "clean":
        return SceneSpec(num_boxes=1 + seed % 3, box_size_range=(2, 4),
                         region_extent=9, rng_seed=seed)
    if name == "noisy":
        return SceneSpec(num_boxes=2, box_size_range=(2, 4), region_extent=7,
                         noise_px=1.0, spurious_rate=0.15, dropout_rate=0.1,
                         rng_seed=seed)
    if name == "urban":
        return SceneSpec(num_boxes=26, num_walls=6, box_size_range=(2, 5),
                         wall_size_range=(4, 10), region_extent=26,
                         cam_distance_factor=(1.8, 2.3),
                         margin_frac=0.01, noise_px=0.5, spurious_rate=0.05,
                         dropout_rate=0.05, rng_seed=seed)
    raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")


def write_ground_truth(gt: GroundTruth, path: str) -> None:
    data = {
        "schema_version": SCHEMA_VERSION,
        "margin": gt.margin,
        "extension_px": gt.extension_px,
        "lines": [
            {
                "id": lid,
                "p1": [float(x) for x in gt.points[lid][0]],
                "p2": [float(x) for x in gt.points[lid][1]],
                "dir": gt.directions[lid].value,
                "consts": {str(k): v for k, v in sorted(gt.const_coords[lid].items())},
            }
            for lid in sorted(gt.points)
        ],
        "edges": [
            {"i": i, "j": j, "real": bool(real)}
            for (i, j), real in sorted(gt.edge_labels.items())
        ],
    }
    _dump(data, path)


def read_ground_truth(path: str) -> GroundTruth:
    schema = {
        "type": "object",
        "required": ["schema_version", "margin", "extension_px", "lines", "edges"],
    }
    data = _load(path, schema, "ground truth")
    points, dirs, consts = {}, {}, {}
    for rec in data["lines"]:
        lid = rec["id"]
        points[lid] = (np.array(rec["p1"]), np.array(rec["p2"]))
        dirs[lid] = Direction(rec["dir"])
        consts[lid] = {int(k): int(v) for k, v in rec["consts"].items()}
    labels = {(rec["i"], rec["j"]): bool(rec["real"]) for rec in data["edges"]}
    return GroundTruth(points=points, directions=dirs, const_coords=consts,
                       edge_labels=labels, margin=data["margin"],
                       extension_px=data["extension_px"])
