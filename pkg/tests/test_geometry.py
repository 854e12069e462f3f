import math

import numpy as np
import pytest

from linelift.errors import DegenerateInputError, VanishingPointEstimationError
from linelift.geometry import (
    CameraIntrinsics,
    Direction,
    Point2H,
    WorldRotation,
    backproject,
    estimate_vanishing_points,
    label_direction,
    rotation_from_labeled_lines,
    rotation_from_vanishing_points,
    vanishing_points_from_rotation,
)
from linelift import synth

from conftest import make_camera, random_rotation, rotation_about_z
from oracles import inverse_3x3, rotation_error_deg


class TestBackproject:
    def test_identity(self, identity_camera):
        ray = backproject(identity_camera, WorldRotation(np.eye(3)), Point2H(0, 0, 1))
        assert np.allclose(ray.array(), [0, 0, 1])

    def test_focal_100(self):
        # oracle: explicit adjugate inverse of K applied to p, cross-checked
        # against a general linear solve
        k = np.diag([100.0, 100.0, 1.0])
        k[0, 2] = k[1, 2] = 50.0  # keep the principal point inside the image
        cam = CameraIntrinsics(k=k, width=100, height=100)
        p = np.array([100.0, 50.0, 1.0])  # u offset by f from the principal point
        via_adjugate = inverse_3x3(k) @ p
        via_solve = np.linalg.solve(k, p)
        assert np.allclose(via_adjugate, via_solve, atol=1e-12)
        assert np.allclose(via_adjugate, [0.5, 0.0, 1.0])

        ray = backproject(cam, WorldRotation(np.eye(3)), Point2H(100.0, 50.0, 1.0))
        assert np.allclose(ray.array(), [0.5, 0.0, 1.0])

    def test_focal_100_principal_origin(self):
        # the spec's diag(f, f, 1) case: p = (100, 0, 1) -> d parallel (1, 0, 1)
        cam = CameraIntrinsics(k=np.diag([100.0, 100.0, 1.0]), width=200, height=200)
        ray = backproject(cam, WorldRotation(np.eye(3)), Point2H(100.0, 0.0, 1.0))
        expected = inverse_3x3(np.diag([100.0, 100.0, 1.0])) @ np.array([100.0, 0.0, 1.0])
        cross = np.cross(ray.array(), expected)
        assert np.linalg.norm(cross) < 1e-12
        assert np.allclose(ray.array(), [1.0, 0.0, 1.0])

    def test_z_rotation_fixes_z_axis(self, identity_camera):
        rot = rotation_about_z(90.0)
        ray = backproject(identity_camera, rot, Point2H(0, 0, 1))
        assert np.allclose(ray.array(), [0, 0, 1], atol=1e-15)

    def test_point_at_infinity_rejected(self, identity_camera):
        with pytest.raises(DegenerateInputError):
            backproject(identity_camera, WorldRotation(np.eye(3)), Point2H(1, 0, 0))

    def test_parallel_to_solve_property(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            f = rng.uniform(200, 2000)
            cam = make_camera(f=f)
            rot = random_rotation(rng)
            p = Point2H(rng.uniform(-500, 2000), rng.uniform(-500, 2000),
                        rng.choice([-2.0, -1.0, 1.0, 3.0]))
            ray = backproject(cam, rot, p)
            reference = rot.r.T @ np.linalg.solve(cam.k, p.array() * np.sign(p.w))
            reference /= np.max(np.abs(reference))
            assert np.linalg.norm(np.cross(ray.array(), reference)) < 1e-12

    def test_negative_w_canonicalized(self, identity_camera):
        # scaling p by -1 must not flip the stored ray
        r1 = backproject(identity_camera, WorldRotation(np.eye(3)), Point2H(1, 1, 1))
        r2 = backproject(identity_camera, WorldRotation(np.eye(3)), Point2H(-1, -1, -1))
        assert np.allclose(r1.array(), r2.array())


def _cube_lines(seed, strip_labels=True, angle_noise_deg=0.0, rng=None):
    instance, _ = synth.generate_scene(synth.preset("cube", seed))
    lines = instance.lines
    if angle_noise_deg > 0:
        noisy = []
        for ln in lines:
            (x1, y1), (x2, y2) = ln.p1.xy(), ln.p2.xy()
            mid = np.array([(x1 + x2) / 2, (y1 + y2) / 2])
            ang = math.radians(rng.normal(0.0, angle_noise_deg))
            c, s = math.cos(ang), math.sin(ang)
            rot2 = np.array([[c, -s], [s, c]])
            p1 = rot2 @ (np.array([x1, y1]) - mid) + mid
            p2 = rot2 @ (np.array([x2, y2]) - mid) + mid
            noisy.append(type(ln)(id=ln.id, p1=Point2H.from_xy(*p1),
                                  p2=Point2H.from_xy(*p2),
                                  direction=None if strip_labels else ln.direction))
        lines = noisy
    elif strip_labels:
        lines = [type(ln)(id=ln.id, p1=ln.p1, p2=ln.p2, direction=None)
                 for ln in lines]
    return instance, lines


class TestVanishingPoints:
    def test_cube_rotation_recovered_exactly(self):
        instance, lines = _cube_lines(seed=0)
        vps, rot = estimate_vanishing_points(lines, instance.camera, rng_seed=0)
        err = rotation_error_deg(rot.r, instance.rotation.r)
        assert err < 0.1

    def test_deterministic_for_fixed_seed(self):
        instance, lines = _cube_lines(seed=1)
        _, rot1 = estimate_vanishing_points(lines, instance.camera, rng_seed=5)
        _, rot2 = estimate_vanishing_points(lines, instance.camera, rng_seed=5)
        assert np.array_equal(rot1.r, rot2.r)

    def test_parallel_lines_fail(self, identity_camera):
        from linelift.sceneio import InstanceLine

        cam = make_camera()
        lines = [InstanceLine(i, Point2H.from_xy(100 + 30 * i, 100),
                              Point2H.from_xy(100 + 30 * i, 900), None)
                 for i in range(12)]
        with pytest.raises(VanishingPointEstimationError):
            estimate_vanishing_points(lines, cam, rng_seed=0)

    def test_noisy_cube_rotation_within_2_degrees(self):
        # statistical acceptance over 20 seeds with 1 degree angular noise
        errors = []
        for seed in range(20):
            rng = np.random.default_rng(1000 + seed)
            instance, lines = _cube_lines(seed=seed, angle_noise_deg=1.0, rng=rng)
            try:
                _, rot = estimate_vanishing_points(lines, instance.camera,
                                                   rng_seed=seed)
            except VanishingPointEstimationError:
                errors.append(90.0)
                continue
            errors.append(rotation_error_deg(rot.r, instance.rotation.r))
        assert float(np.mean(errors)) < 2.0

    def test_vy_is_most_vertical(self):
        instance, lines = _cube_lines(seed=2)
        vps, rot = estimate_vanishing_points(lines, instance.camera, rng_seed=0)
        cam = instance.camera

        def verticality(p):
            if p.at_infinity:
                d = np.array([p.u, p.v])
            else:
                cx, cy = cam.principal_point
                d = np.array([p.xy()[0] - cx, p.xy()[1] - cy])
            return abs(d[1]) / np.linalg.norm(d)

        vy = verticality(vps.vy)
        assert vy >= verticality(vps.vx) - 1e-9
        assert vy >= verticality(vps.vz) - 1e-9

    def test_rotation_orthonormal_and_proper(self):
        for seed in range(5):
            instance, lines = _cube_lines(seed=seed)
            _, rot = estimate_vanishing_points(lines, instance.camera, rng_seed=0)
            assert np.max(np.abs(rot.r.T @ rot.r - np.eye(3))) < 1e-9
            assert abs(np.linalg.det(rot.r) - 1.0) < 1e-9


class TestRotationFromVanishingPoints:
    def test_projective_scale_invariance(self):
        instance, _ = _cube_lines(seed=3, strip_labels=False)
        cam = instance.camera
        vps = vanishing_points_from_rotation(instance.rotation, cam)
        base = rotation_from_vanishing_points(vps, cam)
        rng = np.random.default_rng(11)
        for _ in range(20):
            scales = rng.choice([-3.0, -1.0, 0.5, 2.0, 7.5], size=3)
            scaled = type(vps)(
                vx=Point2H(vps.vx.u * scales[0], vps.vx.v * scales[0], vps.vx.w * scales[0]),
                vy=Point2H(vps.vy.u * scales[1], vps.vy.v * scales[1], vps.vy.w * scales[1]),
                vz=Point2H(vps.vz.u * scales[2], vps.vz.v * scales[2], vps.vz.w * scales[2]),
            )
            again = rotation_from_vanishing_points(scaled, cam)
            assert np.allclose(again.r, base.r, atol=1e-12)

    def test_matches_source_rotation_axes(self):
        instance, _ = _cube_lines(seed=4, strip_labels=False)
        vps = vanishing_points_from_rotation(instance.rotation, instance.camera)
        rot = rotation_from_vanishing_points(vps, instance.camera)
        # columns must match the source axes up to sign
        for col in range(3):
            dot = abs(float(rot.r[:, col] @ instance.rotation.r[:, col]))
            assert dot > 1 - 1e-9

    def test_labeled_lines_fit(self):
        instance, lines = _cube_lines(seed=5, strip_labels=False)
        rot = rotation_from_labeled_lines(lines, instance.camera)
        for col in range(3):
            dot = abs(float(rot.r[:, col] @ instance.rotation.r[:, col]))
            assert dot > 1 - 1e-6


class TestLabelDirection:
    def _vps_aligned(self, cam):
        # axis-aligned rotation: x right, y down-ish, z forward
        return vanishing_points_from_rotation(WorldRotation(np.eye(3)), cam)

    def test_exact_alignment(self):
        cam = make_camera()
        vps = self._vps_aligned(cam)
        from conftest import seg
        # x vanishing point is at infinity along image u: a horizontal segment
        line = seg(0, 100, 600, 300, 600, Direction.X)
        assert label_direction(line, vps) is Direction.X

    def test_unlabeled_when_oblique(self):
        cam = make_camera()
        vps = self._vps_aligned(cam)
        from conftest import seg
        # 45 degrees to the x and y image directions, far from z's vanishing point
        line = seg(0, 100, 100, 200, 200, Direction.X)
        assert label_direction(line, vps, tol_deg=5.0) is None

    def test_endpoint_swap_invariance(self):
        instance, lines = _cube_lines(seed=6, strip_labels=False)
        vps = vanishing_points_from_rotation(instance.rotation, instance.camera)
        for ln in lines:
            a = label_direction(ln, vps)
            swapped = type(ln)(id=ln.id, p1=ln.p2, p2=ln.p1, direction=ln.direction)
            assert label_direction(swapped, vps) is a

    def test_cube_labels_match_generator(self):
        for seed in range(5):
            instance, _ = _cube_lines(seed=seed, strip_labels=False)
            vps = vanishing_points_from_rotation(instance.rotation, instance.camera)
            for ln in instance.lines:
                assert label_direction(ln, vps) is ln.direction
