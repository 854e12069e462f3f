"""Camera model, vanishing points, Manhattan rotation, and back-projection.

Coordinate conventions:
  * Image frame: pixels, origin top-left, u right, v down. 2D points are
    homogeneous (u, v, w); finite points have w != 0.
  * Camera frame: right-handed, x right, y down, z forward along the
    optical axis. The camera center is the origin of both the camera and
    the world frame (reconstruction is up to one global scale anyway).
  * World frame: the three Manhattan axes. The rotation R maps world
    coordinates to camera coordinates, so its columns are the Manhattan
    axis directions expressed in the camera frame, and the back-projected
    ray of an image point p is d = R^-1 K^-1 p in world coordinates.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, VanishingPointEstimationError

ORTHONORMALITY_TOL = 1e-9


class Direction(enum.Enum):
    """Manhattan axis label of a line's underlying 3D direction."""

    X = "x"
    Y = "y"
    Z = "z"

    @property
    def index(self) -> int:
        return {"x": 0, "y": 1, "z": 2}[self.value]

    @staticmethod
    def from_index(i: int) -> "Direction":
        return (Direction.X, Direction.Y, Direction.Z)[i]

    def others(self) -> tuple["Direction", "Direction"]:
        """The two remaining axes, in canonical x < y < z order."""
        rest = [d for d in (Direction.X, Direction.Y, Direction.Z) if d is not self]
        return rest[0], rest[1]


def third_axis(a: Direction, b: Direction) -> Direction:
    """The axis perpendicular to two distinct Manhattan directions."""
    if a is b:
        raise ValueError("directions must differ")
    (rest,) = [d for d in Direction if d is not a and d is not b]
    return rest


@dataclass(frozen=True)
class Point2H:
    """Homogeneous 2D image point (u, v, w), w = 0 meaning at infinity."""

    u: float
    v: float
    w: float = 1.0

    def __post_init__(self):
        if self.u == 0.0 and self.v == 0.0 and self.w == 0.0:
            raise DegenerateInputError("homogeneous point (0, 0, 0) is invalid")

    @property
    def at_infinity(self) -> bool:
        return self.w == 0.0

    def array(self) -> np.ndarray:
        return np.array([self.u, self.v, self.w], dtype=float)

    def xy(self) -> tuple[float, float]:
        if self.w == 0.0:
            raise DegenerateInputError("point at infinity has no affine coordinates")
        return self.u / self.w, self.v / self.w

    @staticmethod
    def from_xy(u: float, v: float) -> "Point2H":
        return Point2H(float(u), float(v), 1.0)


@dataclass
class CameraIntrinsics:
    """Upper-triangular intrinsic matrix plus image size in pixels."""

    k: np.ndarray
    width: int
    height: int

    def __post_init__(self):
        self.k = np.asarray(self.k, dtype=float)
        if self.k.shape != (3, 3):
            raise ValueError("intrinsic matrix must be 3x3")
        lower = np.array([self.k[1, 0], self.k[2, 0], self.k[2, 1]])
        if np.any(np.abs(lower) > 1e-9):
            raise ValueError("intrinsic matrix must be upper-triangular")
        if self.k[0, 0] <= 0 or self.k[1, 1] <= 0 or self.k[2, 2] <= 0:
            raise ValueError("focal entries must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")
        cx, cy = self.principal_point
        if not (0 <= cx <= self.width and 0 <= cy <= self.height):
            raise ValueError("principal point must lie inside the image")

    @property
    def principal_point(self) -> tuple[float, float]:
        return self.k[0, 2] / self.k[2, 2], self.k[1, 2] / self.k[2, 2]

    def k_inv(self) -> np.ndarray:
        return np.linalg.inv(self.k)


@dataclass
class WorldRotation:
    """World-to-camera rotation; columns are Manhattan axes in camera frame."""

    r: np.ndarray

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        if self.r.shape != (3, 3):
            raise ValueError("rotation must be 3x3")
        if np.max(np.abs(self.r.T @ self.r - np.eye(3))) > ORTHONORMALITY_TOL:
            raise ValueError("rotation is not orthonormal within 1e-9")
        if abs(np.linalg.det(self.r) - 1.0) > ORTHONORMALITY_TOL:
            raise ValueError("rotation determinant must be +1 within 1e-9")

    def world_from_camera(self, v: np.ndarray) -> np.ndarray:
        return self.r.T @ v

    def camera_from_world(self, v: np.ndarray) -> np.ndarray:
        return self.r @ v


@dataclass(frozen=True)
class Ray:
    """Back-projected ray direction in world coordinates.

    Stored normalized so the component with the largest magnitude is +1 or
    -1; the sign is canonical because the source homogeneous point is
    scaled to positive w before back-projection (in front of the camera).
    """

    d: tuple[float, float, float]

    def array(self) -> np.ndarray:
        return np.array(self.d, dtype=float)

    @staticmethod
    def from_array(d: np.ndarray) -> "Ray":
        d = np.asarray(d, dtype=float)
        peak = np.max(np.abs(d))
        if peak == 0.0 or not np.isfinite(peak):
            raise DegenerateInputError("ray direction must be nonzero and finite")
        d = d / peak
        return Ray((float(d[0]), float(d[1]), float(d[2])))


@dataclass
class VanishingPoints:
    """One vanishing point per Manhattan axis (possibly at infinity)."""

    vx: Point2H
    vy: Point2H
    vz: Point2H

    def by_axis(self, axis: Direction) -> Point2H:
        return {Direction.X: self.vx, Direction.Y: self.vy, Direction.Z: self.vz}[axis]

    def validate(self, cam: CameraIntrinsics, ortho_tol_deg: float = 2.0) -> None:
        """Check pairwise distinctness and orthogonality of K^-1 v directions."""
        pts = [self.vx, self.vy, self.vz]
        dirs = []
        for p in pts:
            d = cam.k_inv() @ p.array()
            n = np.linalg.norm(d)
            if n == 0:
                raise DegenerateInputError("vanishing point maps to zero direction")
            dirs.append(d / n)
        for i in range(3):
            for j in range(i + 1, 3):
                cross = np.linalg.norm(np.cross(pts[i].array(), pts[j].array()))
                if cross < 1e-12:
                    raise ValueError("vanishing points must be projectively distinct")
                ang = math.degrees(math.asin(min(1.0, abs(float(np.dot(dirs[i], dirs[j]))))))
                if ang > ortho_tol_deg:
                    raise ValueError(
                        f"vanishing directions {i} and {j} deviate from orthogonality "
                        f"by {ang:.3f} deg (tolerance {ortho_tol_deg})")


def backproject(cam: CameraIntrinsics, rot: WorldRotation, p: Point2H) -> Ray:
    """Back-project an image point to its world-frame ray d = R^-1 K^-1 p.

    The homogeneous point is scaled to positive w first, so the ray points
    into the half-space in front of the camera.
    """
    if p.at_infinity:
        raise DegenerateInputError("cannot back-project a point at infinity")
    ph = p.array()
    if ph[2] < 0:
        ph = -ph
    d = rot.r.T @ np.linalg.solve(cam.k, ph)
    return Ray.from_array(d)


# ---------------------------------------------------------------------------
# Vanishing points and rotation recovery
# ---------------------------------------------------------------------------


def _line_normals(lines, cam: CameraIntrinsics) -> np.ndarray:
    """Unit normals of the back-projected planes of 2D lines (camera frame).

    A line l (as p1 x p2 in pixel homogeneous coordinates) lies on the
    plane through the camera center with normal K^T l: a camera-frame
    direction d projects onto the line iff (K^T l) . d = 0.
    """
    normals = np.empty((len(lines), 3))
    for idx, ln in enumerate(lines):
        l2 = np.cross(ln.p1.array(), ln.p2.array())
        n = cam.k.T @ l2
        norm = np.linalg.norm(n)
        if norm < 1e-12:
            raise DegenerateInputError(f"line {idx} is degenerate")
        normals[idx] = n / norm
    return normals


def _direction_inliers(normals: np.ndarray, d: np.ndarray, tol_deg: float) -> np.ndarray:
    return np.abs(normals @ d) < math.sin(math.radians(tol_deg))


def _best_direction(normals: np.ndarray, candidates: np.ndarray,
                    tol_deg: float) -> tuple[np.ndarray | None, int]:
    best_d, best_count = None, 0
    for d in candidates:
        count = int(np.count_nonzero(_direction_inliers(normals, d, tol_deg)))
        if count > best_count:
            best_d, best_count = d, count
    return best_d, best_count


def _candidate_directions(normals: np.ndarray, active: np.ndarray,
                          rng: np.random.Generator, trials: int) -> np.ndarray:
    """Cross products of pairs of active line normals, deduplicated numerically."""
    idx = np.flatnonzero(active)
    pairs = []
    if len(idx) <= 25:
        pairs = [(idx[a], idx[b]) for a in range(len(idx)) for b in range(a + 1, len(idx))]
    else:
        for _ in range(trials):
            a, b = rng.choice(idx, size=2, replace=False)
            pairs.append((int(a), int(b)))
    out = []
    for a, b in pairs:
        d = np.cross(normals[a], normals[b])
        n = np.linalg.norm(d)
        if n < 1e-8:
            continue
        out.append(d / n)
    return np.array(out) if out else np.empty((0, 3))


def _orthonormalize_triple(dirs: np.ndarray) -> np.ndarray:
    """Project three row directions onto the nearest orthonormal triple (SVD)."""
    u, _, vt = np.linalg.svd(dirs.T)
    rot = u @ np.diag([1.0, 1.0, np.sign(np.linalg.det(u @ vt))]) @ vt
    return rot.T


def _refine_rotation(normals: np.ndarray, dirs: np.ndarray, tol_deg: float,
                     iterations: int = 5) -> np.ndarray:
    """Alternate cluster assignment and orthogonality-constrained refit.

    Each axis direction is refit as the smallest eigenvector of the sum of
    outer products of its assigned normals, then the three directions are
    projected onto the nearest orthonormal triple via SVD.
    """
    for _ in range(iterations):
        scores = np.abs(normals @ dirs.T)  # (n_lines, 3)
        assign = np.argmin(scores, axis=1)
        ok = scores[np.arange(len(normals)), assign] < math.sin(math.radians(tol_deg))
        new_dirs = dirs.copy()
        for axis in range(3):
            members = normals[(assign == axis) & ok]
            if len(members) < 2:
                continue
            scatter = members.T @ members
            _, eigvecs = np.linalg.eigh(scatter)
            d = eigvecs[:, 0]
            if np.dot(d, dirs[axis]) < 0:
                d = -d
            new_dirs[axis] = d
        dirs = _orthonormalize_triple(new_dirs)
    return dirs


def _verticality(d_cam: np.ndarray, cam: CameraIntrinsics) -> float:
    """How vertical lines along camera-frame direction d appear in the image.

    Measured at the principal point: the image direction toward the
    vanishing point K d. For d parallel to the image plane the vanishing
    point is at infinity and the image direction is (d_x, d_y) directly.
    """
    v = cam.k @ d_cam
    if abs(v[2]) < 1e-9:
        img_dir = np.array([v[0], v[1]])
    else:
        cx, cy = cam.principal_point
        img_dir = np.array([v[0] / v[2] - cx, v[1] / v[2] - cy])
    n = np.linalg.norm(img_dir)
    if n < 1e-12:
        return 0.0
    return abs(img_dir[1]) / n


def _order_axes(dirs: np.ndarray, cam: CameraIntrinsics) -> np.ndarray:
    """Assign the orthonormal direction triple to (x, y, z) columns.

    y is the most vertical direction in image space; z is the remaining
    direction pointing most along the optical axis (sign fixed forward);
    x = y cross z, which makes det(R) = +1 by construction.
    """
    vert = [_verticality(d, cam) for d in dirs]
    iy = int(np.argmax(vert))
    rest = [i for i in range(3) if i != iy]
    iz = rest[int(np.argmax([abs(dirs[i][2]) for i in rest]))]
    d_y = dirs[iy]
    # canonical signs: y points toward positive image v, z points forward
    if d_y[np.argmax(np.abs(d_y))] < 0:
        d_y = -d_y
    d_z = dirs[iz]
    if d_z[2] < 0 or (d_z[2] == 0 and d_z[np.argmax(np.abs(d_z))] < 0):
        d_z = -d_z
    d_x = np.cross(d_y, d_z)
    return np.column_stack([d_x, d_y, d_z])


def _assemble_named_rotation(dirs: np.ndarray) -> WorldRotation:
    """Build the rotation from per-axis directions whose names are fixed.

    Signs are canonicalized deterministically (largest-magnitude component
    positive, z preferring forward), and the x sign is chosen last so that
    det(R) = +1. Flipping an axis direction does not change which world
    axis it is, so the sign convention is free but must be stable.
    """
    dirs = dirs.copy()
    for axis in (1, 2):
        d = dirs[axis]
        if axis == 2 and abs(d[2]) > 1e-9:
            if d[2] < 0:
                dirs[axis] = -d
        elif d[np.argmax(np.abs(d))] < 0:
            dirs[axis] = -d
    if np.linalg.det(dirs.T) < 0:
        dirs[0] = -dirs[0]
    return WorldRotation(_orthonormalize_triple(dirs).T)


def rotation_from_vanishing_points(vps: VanishingPoints, cam: CameraIntrinsics,
                                   ortho_tol_deg: float = 2.0) -> WorldRotation:
    """Recover the Manhattan rotation whose columns are the K^-1 v directions.

    Invariant to rescaling any vanishing point's homogeneous coordinates
    (projective scale invariance), because directions are renormalized and
    signs are canonicalized.
    """
    vps.validate(cam, ortho_tol_deg)
    k_inv = cam.k_inv()
    dirs = []
    for p in (vps.vx, vps.vy, vps.vz):
        d = k_inv @ p.array()
        dirs.append(d / np.linalg.norm(d))
    return _assemble_named_rotation(np.array(dirs))


def rotation_from_labeled_lines(lines, cam: CameraIntrinsics) -> WorldRotation:
    """Fit the Manhattan rotation from lines that already carry axis labels.

    Deterministic least-squares per axis followed by SVD orthonormalization;
    used to bypass RANSAC when the instance provides direction labels.
    """
    normals = _line_normals(lines, cam)
    dirs = []
    for axis in (Direction.X, Direction.Y, Direction.Z):
        members = normals[[i for i, ln in enumerate(lines) if ln.direction is axis]]
        if len(members) < 2:
            raise VanishingPointEstimationError(
                f"need at least 2 lines labeled {axis.value} to fit the rotation")
        scatter = members.T @ members
        _, eigvecs = np.linalg.eigh(scatter)
        dirs.append(eigvecs[:, 0])
    return _assemble_named_rotation(np.array(dirs))


def vanishing_points_from_rotation(rot: WorldRotation, cam: CameraIntrinsics) -> VanishingPoints:
    """Vanishing points v = K * (axis direction in camera frame)."""
    pts = []
    for axis in range(3):
        v = cam.k @ rot.r[:, axis]
        if abs(v[2]) < 1e-12:
            pts.append(Point2H(float(v[0]), float(v[1]), 0.0))
        else:
            pts.append(Point2H(float(v[0] / v[2]), float(v[1] / v[2]), 1.0))
    return VanishingPoints(*pts)


def estimate_vanishing_points(lines, cam: CameraIntrinsics, rng_seed: int,
                              inlier_tol_deg: float = 3.0,
                              ortho_tol_deg: float = 2.0,
                              ransac_trials: int = 256,
                              ) -> tuple[VanishingPoints, WorldRotation]:
    """Estimate three orthogonal vanishing directions and the rotation.

    Sequential RANSAC on the Gaussian sphere: candidate directions are
    cross products of pairs of line-plane normals; after each axis its
    inliers are removed, and the third axis is seeded by the cross product
    of the first two. A joint orthogonality-constrained refinement
    (assign/refit/SVD) polishes the triple. When the strict inlier
    tolerance finds fewer than three clusters (sparse or noisy scenes),
    the search deterministically retries at doubled tolerances before
    giving up. Deterministic for a fixed seed.
    """
    if len(lines) < 6:
        raise VanishingPointEstimationError("need at least 6 lines (2 per axis)")
    normals = _line_normals(lines, cam)
    error: VanishingPointEstimationError | None = None
    for tol in (inlier_tol_deg, 2 * inlier_tol_deg, 10.0):
        rng = np.random.default_rng(rng_seed)
        try:
            found = _ransac_axes(normals, rng, tol, ransac_trials)
        except VanishingPointEstimationError as exc:
            error = exc
            continue
        dirs = _refine_rotation(normals, found, tol_deg=max(tol, inlier_tol_deg))
        rot = WorldRotation(_order_axes(dirs, cam))
        vps = vanishing_points_from_rotation(rot, cam)
        vps.validate(cam, ortho_tol_deg)
        return vps, rot
    raise error


def _ransac_axes(normals: np.ndarray, rng: np.random.Generator,
                 inlier_tol_deg: float, ransac_trials: int) -> np.ndarray:
    """Best orthogonal direction triple by total inlier count.

    Candidates are cross products of line-normal pairs; each near-
    orthogonal candidate pair is completed by its cross product and the
    whole triple is scored jointly (each line votes for its best axis).
    Greedy one-axis-at-a-time selection is not used: with few lines a
    spurious diagonal direction can out-vote a true axis and poison the
    remaining search.
    """
    active = np.ones(len(normals), dtype=bool)
    cands = _candidate_directions(normals, active, rng, ransac_trials)
    if not len(cands):
        raise VanishingPointEstimationError(
            "could not find 3 orthogonal line clusters; provide direction labels")
    # keep the strongest individual candidates to bound the pair search
    counts = (np.abs(normals @ cands.T) < math.sin(math.radians(inlier_tol_deg))).sum(axis=0)
    order = np.lexsort((np.arange(len(cands)), -counts))
    cands = cands[order[:40]]

    sin_tol = math.sin(math.radians(inlier_tol_deg))
    best_triple, best_score = None, -1
    for i in range(len(cands)):
        for j in range(i + 1, len(cands)):
            if abs(float(cands[i] @ cands[j])) > math.sin(math.radians(10.0)):
                continue
            d3 = np.cross(cands[i], cands[j])
            d3 /= np.linalg.norm(d3)
            triple = np.vstack([cands[i], cands[j], d3])
            dist = np.abs(normals @ triple.T)  # (n_lines, 3)
            assigned = np.argmin(dist, axis=1)
            ok = dist[np.arange(len(normals)), assigned] < sin_tol
            per_axis = np.bincount(assigned[ok], minlength=3)
            if np.any(per_axis < 2):
                continue
            score = int(np.count_nonzero(ok))
            if score > best_score:
                best_triple, best_score = triple, score
    if best_triple is None:
        raise VanishingPointEstimationError(
            "could not find 3 orthogonal line clusters; provide direction labels")
    return best_triple


def label_direction(line, vps: VanishingPoints, tol_deg: float = 5.0) -> Direction | None:
    """Label a segment with the axis whose vanishing point best explains it.

    The score of an axis is the angle (mod 180 deg) between the segment and
    the line joining the segment midpoint to that axis' vanishing point.
    Returns None (unlabeled) when the best angle exceeds the tolerance.
    Symmetric under endpoint swap.
    """
    x1, y1 = line.p1.xy()
    x2, y2 = line.p2.xy()
    seg = np.array([x2 - x1, y2 - y1])
    seg_norm = np.linalg.norm(seg)
    if seg_norm < 1e-12:
        raise DegenerateInputError("zero-length segment cannot be labeled")
    seg /= seg_norm
    mid = np.array([(x1 + x2) / 2.0, (y1 + y2) / 2.0])

    best_axis, best_angle = None, math.inf
    for axis in (Direction.X, Direction.Y, Direction.Z):
        vp = vps.by_axis(axis)
        if vp.at_infinity:
            to_vp = np.array([vp.u, vp.v])
        else:
            to_vp = np.array(vp.xy()) - mid
        n = np.linalg.norm(to_vp)
        if n < 1e-9:
            # midpoint coincides with the vanishing point: any orientation fits
            angle = 0.0
        else:
            cosang = min(1.0, abs(float(np.dot(seg, to_vp / n))))
            angle = math.degrees(math.acos(cosang))
        if angle < best_angle:
            best_axis, best_angle = axis, angle
    if best_angle > tol_deg:
        return None
    return best_axis
