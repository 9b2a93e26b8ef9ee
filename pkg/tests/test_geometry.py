"""Geometry layer: frames, reflections, rays, sketch transforms.

Reflection correctness is checked against an independently computed
householder matrix (numpy), not against the implementation itself.
"""

import math
import random

import numpy as np
import pytest

from collabboard import geometry as geo
from collabboard.geometry import (
    Frame,
    GeometryError,
    Plane,
    Pose,
    Ray,
    Vec3,
)

from helpers import rand_plane, rand_point, rand_pose, rand_unit


class TestVec3:
    def test_basic_algebra(self):
        a = Vec3(1.0, 2.0, 3.0)
        b = Vec3(-2.0, 0.5, 4.0)
        assert a + b == Vec3(-1.0, 2.5, 7.0)
        assert a - b == Vec3(3.0, 1.5, -1.0)
        assert a.scaled(2.0) == Vec3(2.0, 4.0, 6.0)
        assert a.dot(b) == pytest.approx(11.0)
        assert Vec3(1, 0, 0).cross(Vec3(0, 1, 0)) == Vec3(0.0, 0.0, 1.0)

    def test_rejects_non_finite(self):
        with pytest.raises(GeometryError):
            Vec3.from_list([1.0, float("nan"), 0.0])
        with pytest.raises(GeometryError):
            Vec3.from_list([float("inf"), 0.0, 0.0])

    def test_normalized_zero_vector(self):
        with pytest.raises(GeometryError):
            Vec3(0.0, 0.0, 0.0).normalized()


class TestFrame:
    def test_identity_is_valid(self):
        geo.IDENTITY_FRAME.validate()

    def test_look_frame_is_orthonormal_right_handed(self):
        rng = random.Random(11)
        for _ in range(500):
            f = rand_pose(rng).frame
            f.validate()
            # right-handed: right x up = forward
            rxu = f.right.cross(f.up)
            assert (rxu - f.forward).norm() < 1e-9

    def test_validate_rejects_non_unit(self):
        bad = Frame(Vec3(2.0, 0.0, 0.0), Vec3(0.0, 1.0, 0.0), Vec3(0.0, 0.0, 1.0))
        with pytest.raises(GeometryError):
            bad.validate()

    def test_validate_rejects_non_orthogonal(self):
        s = math.sqrt(0.5)
        bad = Frame(Vec3(1.0, 0.0, 0.0), Vec3(s, s, 0.0), Vec3(0.0, 0.0, 1.0))
        with pytest.raises(GeometryError):
            bad.validate()

    def test_dict_round_trip(self):
        rng = random.Random(3)
        pose = rand_pose(rng)
        again = Pose.from_dict(pose.to_dict())
        assert again == pose


class TestReflection:
    def test_point_matches_householder_oracle(self):
        rng = random.Random(42)
        for _ in range(2000):
            plane = rand_plane(rng)
            p = rand_point(rng)
            got = geo.reflect_point(p, plane)
            n = np.array([plane.normal.x, plane.normal.y, plane.normal.z])
            c = np.array([plane.point.x, plane.point.y, plane.point.z])
            R = np.eye(3) - 2.0 * np.outer(n, n)
            want = c + R @ (np.array([p.x, p.y, p.z]) - c)
            assert np.max(np.abs(want - np.array([got.x, got.y, got.z]))) < 1e-12

    def test_point_on_plane_is_fixed(self):
        rng = random.Random(43)
        for _ in range(2000):
            plane = rand_plane(rng)
            n = plane.normal
            # an in-plane basis
            helper = Vec3(1.0, 0.0, 0.0) if abs(n.x) < 0.9 else Vec3(0.0, 1.0, 0.0)
            t1 = n.cross(helper).normalized()
            t2 = n.cross(t1)
            p = plane.point + t1.scaled(rng.uniform(-3, 3)) + t2.scaled(rng.uniform(-3, 3))
            q = geo.reflect_point(p, plane)
            assert (q - p).norm() < 1e-11

    def test_involution(self):
        rng = random.Random(44)
        for _ in range(2000):
            plane = rand_plane(rng)
            p = rand_point(rng)
            assert (geo.reflect_point(geo.reflect_point(p, plane), plane) - p).norm() < 1e-9

    def test_direction_reflection_preserves_norm(self):
        rng = random.Random(45)
        for _ in range(1000):
            plane = rand_plane(rng)
            d = rand_unit(rng)
            r = geo.reflect_direction(d, plane)
            assert abs(r.norm() - 1.0) < 1e-12

    def test_pose_reflection_keeps_right_handed_frame(self):
        rng = random.Random(46)
        for _ in range(500):
            plane = rand_plane(rng)
            pose = rand_pose(rng)
            ref = geo.reflect_pose(pose, plane)
            ref.frame.validate()
            rxu = ref.frame.right.cross(ref.frame.up)
            assert (rxu - ref.frame.forward).norm() < 1e-9

    def test_pose_reflection_involution(self):
        rng = random.Random(47)
        for _ in range(500):
            plane = rand_plane(rng)
            pose = rand_pose(rng)
            back = geo.reflect_pose(geo.reflect_pose(pose, plane), plane)
            assert (back.position - pose.position).norm() < 1e-9
            for axis in ("right", "up", "forward"):
                a = getattr(back.frame, axis)
                b = getattr(pose.frame, axis)
                assert (a - b).norm() < 1e-9


class TestRayPlane:
    def test_simple_hit(self):
        plane = Plane(Vec3(0.0, 0.0, 2.0), Vec3(0.0, 0.0, -1.0))
        ray = Ray(Vec3(0.0, 0.0, 0.0), Vec3(0.0, 0.0, 1.0))
        hit = geo.ray_plane_intersect(ray, plane)
        assert hit is not None
        point, t = hit
        assert t == pytest.approx(2.0)
        assert (point - Vec3(0.0, 0.0, 2.0)).norm() < 1e-12

    def test_parallel_misses(self):
        plane = Plane(Vec3(0.0, 0.0, 2.0), Vec3(0.0, 0.0, -1.0))
        ray = Ray(Vec3(0.0, 0.0, 0.0), Vec3(1.0, 0.0, 0.0))
        assert geo.ray_plane_intersect(ray, plane) is None

    def test_behind_origin_misses(self):
        plane = Plane(Vec3(0.0, 0.0, 2.0), Vec3(0.0, 0.0, -1.0))
        ray = Ray(Vec3(0.0, 0.0, 3.0), Vec3(0.0, 0.0, 1.0))
        assert geo.ray_plane_intersect(ray, plane) is None

    def test_near_parallel_guard(self):
        plane = Plane(Vec3(0.0, 0.0, 2.0), Vec3(0.0, 0.0, -1.0))
        d = Vec3(1.0, 0.0, 1e-13).normalized()
        ray = Ray(Vec3(0.0, 0.0, 0.0), d)
        assert geo.ray_plane_intersect(ray, plane) is None


class TestRotateScale:
    def test_rotate_matches_numpy_rodrigues(self):
        rng = random.Random(48)
        for _ in range(500):
            p = rand_point(rng)
            c = rand_point(rng)
            axis = rand_unit(rng)
            ang = rng.uniform(-2 * math.pi, 2 * math.pi)
            got = geo.rotate_about_axis(p, c, axis, ang)
            k = np.array([axis.x, axis.y, axis.z])
            K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
            R = np.eye(3) + math.sin(ang) * K + (1 - math.cos(ang)) * (K @ K)
            want = np.array([c.x, c.y, c.z]) + R @ (
                np.array([p.x, p.y, p.z]) - np.array([c.x, c.y, c.z]))
            assert np.max(np.abs(want - np.array([got.x, got.y, got.z]))) < 1e-9

    def test_scale_about_center(self):
        got = geo.scale_about_center(Vec3(2.0, 0.0, 0.0), Vec3(1.0, 0.0, 0.0), 3.0)
        assert got == Vec3(4.0, 0.0, 0.0)

    def test_scale_rejects_non_positive(self):
        with pytest.raises(GeometryError):
            geo.scale_about_center(Vec3(1, 1, 1), Vec3(0, 0, 0), 0.0)
        with pytest.raises(GeometryError):
            geo.scale_about_center(Vec3(1, 1, 1), Vec3(0, 0, 0), -2.0)


class TestSketchTransform:
    def test_apply_invert_round_trip(self):
        rng = random.Random(49)
        for _ in range(1000):
            p = rand_point(rng)
            pivot = rand_point(rng)
            trans = rand_point(rng, 2.0)
            ang = rng.uniform(-7, 7)
            s = rng.uniform(0.05, 20.0)
            q = geo.apply_sketch_transform(p, pivot, trans, ang, s)
            back = geo.invert_sketch_transform(q, pivot, trans, ang, s)
            assert (back - p).norm() < 1e-9 * max(1.0, p.norm())

    def test_identity_transform_is_noop(self):
        p = Vec3(0.3, -0.2, 0.9)
        q = geo.apply_sketch_transform(p, Vec3(1, 2, 3), geo.ZERO, 0.0, 1.0)
        assert (q - p).norm() < 1e-15

    def test_rotation_convention_x_toward_minus_z(self):
        # +90 degrees about +y takes +x to -z.
        q = geo.apply_sketch_transform(Vec3(1.0, 0.0, 0.0), geo.ZERO, geo.ZERO,
                                       math.pi / 2.0, 1.0)
        assert (q - Vec3(0.0, 0.0, -1.0)).norm() < 1e-12


class TestRayAabb:
    def test_hit_and_miss(self):
        lo, hi = Vec3(-1.0, -1.0, -1.0), Vec3(1.0, 1.0, 1.0)
        hit = geo.ray_aabb_intersect(Ray(Vec3(0.0, 0.0, -5.0), Vec3(0.0, 0.0, 1.0)), lo, hi)
        assert hit == pytest.approx(4.0)
        miss = geo.ray_aabb_intersect(Ray(Vec3(0.0, 3.0, -5.0), Vec3(0.0, 0.0, 1.0)), lo, hi)
        assert miss is None

    def test_origin_inside_box(self):
        lo, hi = Vec3(-1.0, -1.0, -1.0), Vec3(1.0, 1.0, 1.0)
        t = geo.ray_aabb_intersect(Ray(Vec3(0.0, 0.0, 0.0), Vec3(1.0, 0.0, 0.0)), lo, hi)
        assert t == pytest.approx(0.0)

    def test_axis_parallel_ray_outside_slab(self):
        lo, hi = Vec3(-1.0, -1.0, -1.0), Vec3(1.0, 1.0, 1.0)
        t = geo.ray_aabb_intersect(Ray(Vec3(5.0, 0.0, -9.0), Vec3(0.0, 0.0, 1.0)), lo, hi)
        assert t is None

    def test_behind_box(self):
        lo, hi = Vec3(-1.0, -1.0, -1.0), Vec3(1.0, 1.0, 1.0)
        t = geo.ray_aabb_intersect(Ray(Vec3(0.0, 0.0, 5.0), Vec3(0.0, 0.0, 1.0)), lo, hi)
        assert t is None


class TestLocalWorld:
    def test_round_trip(self):
        rng = random.Random(50)
        for _ in range(500):
            pose = rand_pose(rng)
            p = rand_point(rng)
            there = geo.local_to_world(pose, p)
            back = geo.world_to_local(pose, there)
            assert (back - p).norm() < 1e-9

    def test_direction_round_trip_preserves_norm(self):
        rng = random.Random(51)
        for _ in range(500):
            pose = rand_pose(rng)
            d = rand_unit(rng)
            w = geo.local_to_world_dir(pose, d)
            assert abs(w.norm() - 1.0) < 1e-12
            back = geo.world_to_local_dir(pose, w)
            assert (back - d).norm() < 1e-9
