import math

import numpy as np
import pytest

from linelift.geometry import CameraIntrinsics, Direction, Point2H, WorldRotation
from linelift.linegraph import LineSegment2D


@pytest.fixture
def identity_camera():
    return CameraIntrinsics(k=np.eye(3), width=2, height=2)


def make_camera(f=1200.0, width=1600, height=1200):
    k = np.array([[f, 0.0, width / 2.0], [0.0, f, height / 2.0], [0.0, 0.0, 1.0]])
    return CameraIntrinsics(k=k, width=width, height=height)


def rotation_about_z(angle_deg):
    a = math.radians(angle_deg)
    return WorldRotation(np.array([
        [math.cos(a), -math.sin(a), 0.0],
        [math.sin(a), math.cos(a), 0.0],
        [0.0, 0.0, 1.0],
    ]))


def random_rotation(rng):
    m = rng.standard_normal((3, 3))
    q, r = np.linalg.qr(m)
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return WorldRotation(q)


def seg(sid, x1, y1, x2, y2, direction):
    return LineSegment2D(id=sid, p1=Point2H.from_xy(x1, y1),
                         p2=Point2H.from_xy(x2, y2), direction=direction)


DIRS = (Direction.X, Direction.Y, Direction.Z)
