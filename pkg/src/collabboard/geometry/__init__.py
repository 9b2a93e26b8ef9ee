"""Dependency-light 3D math: vectors, frames, poses, planes, rays.

Coordinate convention used across the whole engine: right-handed, y-up,
distances in meters.  Board-local frames are right = +x, up = +y,
outward normal = +z.

The arithmetic-heavy kernels live in a compiled extension
(``_kernels``) with a pure-Python twin (``_kernels_py``).  The compiled
module is preferred when importable; set ``COLLAB_GEOM_BACKEND`` to
``python`` or ``compiled`` to force one.  Both produce bit-identical
results (see tests/test_kernel_parity.py).
"""

from __future__ import annotations

import math
import os
from typing import NamedTuple, Optional

_choice = os.environ.get("COLLAB_GEOM_BACKEND", "auto")
if _choice == "python":
    from . import _kernels_py as _k
elif _choice == "compiled":
    from . import _kernels as _k  # type: ignore[no-redef]
else:
    try:
        from . import _kernels as _k  # type: ignore[no-redef]
    except ImportError:
        from . import _kernels_py as _k  # type: ignore[no-redef]

#: Name of the kernel backend in use ("compiled" or "python").
BACKEND: str = _k.BACKEND

# Structural tolerance: unit length / orthogonality of frames.
FRAME_EPS = 1e-9


class GeometryError(ValueError):
    """Invalid geometric input (non-finite, non-unit, degenerate)."""


class Vec3(NamedTuple):
    x: float
    y: float
    z: float

    def __add__(self, o: "Vec3") -> "Vec3":  # type: ignore[override]
        return Vec3(self.x + o.x, self.y + o.y, self.z + o.z)

    def __sub__(self, o: "Vec3") -> "Vec3":
        return Vec3(self.x - o.x, self.y - o.y, self.z - o.z)

    def __neg__(self) -> "Vec3":
        return Vec3(-self.x, -self.y, -self.z)

    def scaled(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    def dot(self, o: "Vec3") -> float:
        return self.x * o.x + self.y * o.y + self.z * o.z

    def cross(self, o: "Vec3") -> "Vec3":
        return Vec3(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def normalized(self) -> "Vec3":
        n = self.norm()
        if n <= 0.0:
            raise GeometryError("cannot normalize zero vector")
        return Vec3(self.x / n, self.y / n, self.z / n)

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)

    def to_list(self) -> list:
        return [float(self.x), float(self.y), float(self.z)]

    @staticmethod
    def from_list(v) -> "Vec3":
        if not isinstance(v, (list, tuple)) or len(v) != 3:
            raise GeometryError(f"expected [x, y, z], got {v!r}")
        out = Vec3(float(v[0]), float(v[1]), float(v[2]))
        if not out.is_finite():
            raise GeometryError(f"non-finite vector {v!r}")
        return out


ZERO = Vec3(0.0, 0.0, 0.0)
X_AXIS = Vec3(1.0, 0.0, 0.0)
Y_AXIS = Vec3(0.0, 1.0, 0.0)
Z_AXIS = Vec3(0.0, 0.0, 1.0)


class Frame(NamedTuple):
    """Orthonormal orientation basis.  Right-handed: right x up = forward."""

    right: Vec3
    up: Vec3
    forward: Vec3

    def validate(self) -> None:
        for axis in (self.right, self.up, self.forward):
            if not axis.is_finite():
                raise GeometryError("non-finite frame axis")
            if abs(axis.norm() - 1.0) > FRAME_EPS:
                raise GeometryError(f"frame axis not unit length: {axis}")
        if abs(self.right.dot(self.up)) > FRAME_EPS:
            raise GeometryError("right/up not orthogonal")
        if abs(self.right.dot(self.forward)) > FRAME_EPS:
            raise GeometryError("right/forward not orthogonal")
        if abs(self.up.dot(self.forward)) > FRAME_EPS:
            raise GeometryError("up/forward not orthogonal")

    def handedness(self) -> float:
        """+1 for right-handed, -1 for left-handed."""
        return 1.0 if self.right.cross(self.up).dot(self.forward) >= 0.0 else -1.0

    def to_dict(self) -> dict:
        return {
            "right": self.right.to_list(),
            "up": self.up.to_list(),
            "fwd": self.forward.to_list(),
        }

    @staticmethod
    def from_dict(d: dict) -> "Frame":
        return Frame(
            Vec3.from_list(d["right"]),
            Vec3.from_list(d["up"]),
            Vec3.from_list(d["fwd"]),
        )


IDENTITY_FRAME = Frame(X_AXIS, Y_AXIS, Z_AXIS)


class Pose(NamedTuple):
    position: Vec3
    frame: Frame

    @property
    def forward(self) -> Vec3:
        return self.frame.forward

    @property
    def up(self) -> Vec3:
        return self.frame.up

    @property
    def right(self) -> Vec3:
        return self.frame.right

    def validate(self) -> None:
        if not self.position.is_finite():
            raise GeometryError("non-finite pose position")
        self.frame.validate()

    def to_dict(self) -> dict:
        d = self.frame.to_dict()
        d["pos"] = self.position.to_list()
        return d

    @staticmethod
    def from_dict(d: dict) -> "Pose":
        return Pose(Vec3.from_list(d["pos"]), Frame.from_dict(d))


class Plane(NamedTuple):
    point: Vec3
    normal: Vec3  # unit

    def validate(self) -> None:
        if not (self.point.is_finite() and self.normal.is_finite()):
            raise GeometryError("non-finite plane")
        if abs(self.normal.norm() - 1.0) > FRAME_EPS:
            raise GeometryError("plane normal not unit length")

    def signed_distance(self, p: Vec3) -> float:
        return (p - self.point).dot(self.normal)


class Ray(NamedTuple):
    origin: Vec3
    direction: Vec3  # unit

    def at(self, t: float) -> Vec3:
        return self.origin + self.direction.scaled(t)

    def to_dict(self) -> dict:
        return {"origin": self.origin.to_list(), "dir": self.direction.to_list()}

    @staticmethod
    def from_dict(d: dict) -> "Ray":
        return Ray(Vec3.from_list(d["origin"]), Vec3.from_list(d["dir"]))


def look_frame(forward: Vec3, up_hint: Vec3 = Y_AXIS) -> Frame:
    """Right-handed frame looking along *forward*, roll-aligned to *up_hint*."""
    f = forward.normalized()
    r = up_hint.cross(f)
    if r.norm() <= 1e-9:
        # forward is (anti)parallel to the hint; fall back to world z.
        r = Z_AXIS.cross(f)
    r = r.normalized()
    u = f.cross(r)
    return Frame(r, u, f)


def pose_at(position: Vec3, forward: Vec3, up_hint: Vec3 = Y_AXIS) -> Pose:
    return Pose(position, look_frame(forward, up_hint))


# ---------------------------------------------------------------------------
# Reflection across a plane
# ---------------------------------------------------------------------------

def reflect_point(p: Vec3, m: Plane) -> Vec3:
    """Mirror image of point *p* across plane *m*; points on the plane are fixed."""
    return Vec3(*_k.reflect_point(
        p.x, p.y, p.z,
        m.point.x, m.point.y, m.point.z,
        m.normal.x, m.normal.y, m.normal.z,
    ))


def reflect_direction(d: Vec3, m: Plane) -> Vec3:
    """Mirror image of direction *d*; the norm is preserved."""
    return Vec3(*_k.reflect_direction(
        d.x, d.y, d.z, m.normal.x, m.normal.y, m.normal.z,
    ))


def reflect_pose(pose: Pose, m: Plane) -> Pose:
    """Mirror a pose across a plane.

    Position, forward and up are reflected; a true mirror image flips
    handedness, so ``right`` is recomputed as up x forward to return a
    right-handed frame.  Gaze and pointing targets depend only on
    position and forward and are unaffected by the fix-up.
    """
    pos = reflect_point(pose.position, m)
    fwd = reflect_direction(pose.frame.forward, m)
    up = reflect_direction(pose.frame.up, m)
    right = up.cross(fwd)
    return Pose(pos, Frame(right, up, fwd))


def ray_plane_intersect(r: Ray, m: Plane):
    """Forward intersection of ray and plane.

    Returns ``(point, t)`` with ``t >= 0``, or ``None`` when the ray is
    parallel to the plane or the hit lies behind the origin.
    """
    hit, t, x, y, z = _k.ray_plane(
        r.origin.x, r.origin.y, r.origin.z,
        r.direction.x, r.direction.y, r.direction.z,
        m.point.x, m.point.y, m.point.z,
        m.normal.x, m.normal.y, m.normal.z,
    )
    if not hit:
        return None
    return (Vec3(x, y, z), t)


# ---------------------------------------------------------------------------
# Manipulation transforms
# ---------------------------------------------------------------------------

def rotate_about_axis(p: Vec3, center: Vec3, axis: Vec3, angle: float) -> Vec3:
    """Rodrigues rotation of *p* about the unit *axis* through *center*."""
    return Vec3(*_k.rotate_about_axis(
        p.x, p.y, p.z, center.x, center.y, center.z,
        axis.x, axis.y, axis.z, angle,
    ))


def scale_about_center(p: Vec3, center: Vec3, s: float) -> Vec3:
    """Uniform scale of *p* about *center*.  Rejects s <= 0."""
    if not (s > 0.0 and math.isfinite(s)):
        raise GeometryError(f"scale factor must be positive and finite, got {s}")
    return Vec3(*_k.scale_about_center(p.x, p.y, p.z, center.x, center.y, center.z, s))


def apply_sketch_transform(p: Vec3, pivot: Vec3, translation: Vec3,
                           angle: float, scale: float) -> Vec3:
    """Scale then yaw (about +y through *pivot*) then translate: the sketch transform."""
    return Vec3(*_k.apply_sketch_transform(
        p.x, p.y, p.z, pivot.x, pivot.y, pivot.z,
        translation.x, translation.y, translation.z, angle, scale,
    ))


def invert_sketch_transform(q: Vec3, pivot: Vec3, translation: Vec3,
                            angle: float, scale: float) -> Vec3:
    """Inverse of :func:`apply_sketch_transform`."""
    return Vec3(*_k.invert_sketch_transform(
        q.x, q.y, q.z, pivot.x, pivot.y, pivot.z,
        translation.x, translation.y, translation.z, angle, scale,
    ))


def ray_aabb_intersect(r: Ray, box_min: Vec3, box_max: Vec3) -> Optional[float]:
    """Entry parameter of a ray into an axis-aligned box, or None on miss.

    Returns 0.0 when the origin is already inside the box.
    """
    hit, t = _k.ray_aabb(
        r.origin.x, r.origin.y, r.origin.z,
        r.direction.x, r.direction.y, r.direction.z,
        box_min.x, box_min.y, box_min.z,
        box_max.x, box_max.y, box_max.z,
    )
    return t if hit else None


# ---------------------------------------------------------------------------
# Local frames
# ---------------------------------------------------------------------------

def world_to_local(pose: Pose, p: Vec3) -> Vec3:
    """Express world point *p* in the local coordinates of *pose*."""
    d = p - pose.position
    return Vec3(d.dot(pose.frame.right), d.dot(pose.frame.up), d.dot(pose.frame.forward))


def local_to_world(pose: Pose, p: Vec3) -> Vec3:
    """Map a point from the local coordinates of *pose* back to world space."""
    r, u, f = pose.frame
    return Vec3(
        pose.position.x + p.x * r.x + p.y * u.x + p.z * f.x,
        pose.position.y + p.x * r.y + p.y * u.y + p.z * f.y,
        pose.position.z + p.x * r.z + p.y * u.z + p.z * f.z,
    )


def world_to_local_dir(pose: Pose, d: Vec3) -> Vec3:
    return Vec3(d.dot(pose.frame.right), d.dot(pose.frame.up), d.dot(pose.frame.forward))


def local_to_world_dir(pose: Pose, d: Vec3) -> Vec3:
    r, u, f = pose.frame
    return Vec3(
        d.x * r.x + d.y * u.x + d.z * f.x,
        d.x * r.y + d.y * u.y + d.z * f.y,
        d.x * r.z + d.y * u.z + d.z * f.z,
    )
