"""Pure-Python geometry kernels.

Fallback twin of the compiled module ``_kernels``.  Both implementations
must perform the same arithmetic in the same order so that results agree
bit-for-bit; the compiled module is built with ``-ffp-contract=off`` for
exactly this reason.  Keep every expression here in sync with
``_kernels.pyx``.
"""

from __future__ import annotations

from math import cos, fabs, sin

BACKEND = "python"

# Below this, a ray direction counts as parallel to a plane.
PARALLEL_EPS = 1e-12


def reflect_point(px, py, pz, mx, my, mz, nx, ny, nz):
    """Mirror point (px,py,pz) across the plane through (mx,my,mz) with unit normal n."""
    dx = px - mx
    dy = py - my
    dz = pz - mz
    k = 2.0 * (dx * nx + dy * ny + dz * nz)
    return (px - k * nx, py - k * ny, pz - k * nz)


def reflect_direction(dx, dy, dz, nx, ny, nz):
    """Mirror direction d across a plane with unit normal n (norm preserved)."""
    k = 2.0 * (dx * nx + dy * ny + dz * nz)
    return (dx - k * nx, dy - k * ny, dz - k * nz)


def ray_plane(ox, oy, oz, dx, dy, dz, px, py, pz, nx, ny, nz):
    """Intersect a ray with a plane.

    Returns ``(hit, t, x, y, z)`` where hit is 0 for a miss (parallel ray
    or intersection behind the origin).
    """
    denom = dx * nx + dy * ny + dz * nz
    if fabs(denom) <= PARALLEL_EPS:
        return (0, 0.0, 0.0, 0.0, 0.0)
    t = ((px - ox) * nx + (py - oy) * ny + (pz - oz) * nz) / denom
    if t < 0.0:
        return (0, 0.0, 0.0, 0.0, 0.0)
    return (1, t, ox + t * dx, oy + t * dy, oz + t * dz)


def rotate_about_axis(px, py, pz, cx, cy, cz, ax, ay, az, angle):
    """Rodrigues rotation of a point about the unit axis a through center c."""
    vx = px - cx
    vy = py - cy
    vz = pz - cz
    c = cos(angle)
    s = sin(angle)
    one_c = 1.0 - c
    kx = ay * vz - az * vy
    ky = az * vx - ax * vz
    kz = ax * vy - ay * vx
    kdv = ax * vx + ay * vy + az * vz
    rx = vx * c + kx * s + ax * kdv * one_c
    ry = vy * c + ky * s + ay * kdv * one_c
    rz = vz * c + kz * s + az * kdv * one_c
    return (cx + rx, cy + ry, cz + rz)


def scale_about_center(px, py, pz, cx, cy, cz, s):
    return (cx + s * (px - cx), cy + s * (py - cy), cz + s * (pz - cz))


def apply_sketch_transform(px, py, pz, vx, vy, vz, tx, ty, tz, angle, scale):
    """Scale, then rotate about the +y axis, about pivot v; then translate by t.

    The transform every sketch carries: ``q = v + t + Ry(angle) * (s * (p - v))``.
    """
    lx = (px - vx) * scale
    ly = (py - vy) * scale
    lz = (pz - vz) * scale
    c = cos(angle)
    s = sin(angle)
    rx = lx * c + lz * s
    rz = -lx * s + lz * c
    return (vx + tx + rx, vy + ty + ly, vz + tz + rz)


def invert_sketch_transform(qx, qy, qz, vx, vy, vz, tx, ty, tz, angle, scale):
    """Inverse of ``apply_sketch_transform`` (scale must be nonzero)."""
    lx = qx - vx - tx
    ly = qy - vy - ty
    lz = qz - vz - tz
    c = cos(angle)
    s = sin(angle)
    rx = lx * c - lz * s
    rz = lx * s + lz * c
    inv = 1.0 / scale
    return (vx + rx * inv, vy + ly * inv, vz + rz * inv)


def ray_aabb(ox, oy, oz, dx, dy, dz, minx, miny, minz, maxx, maxy, maxz):
    """Slab test of a ray against an axis-aligned box.

    Returns ``(hit, t)`` with t the entry parameter (0 when the origin is
    inside the box).  Avoids dividing by zero so the Python and C twins
    branch identically.
    """
    tmin = 0.0
    tmax = 1.7976931348623157e308
    # x slab
    if fabs(dx) <= PARALLEL_EPS:
        if ox < minx or ox > maxx:
            return (0, 0.0)
    else:
        t1 = (minx - ox) / dx
        t2 = (maxx - ox) / dx
        if t1 > t2:
            t1, t2 = t2, t1
        if t1 > tmin:
            tmin = t1
        if t2 < tmax:
            tmax = t2
    # y slab
    if fabs(dy) <= PARALLEL_EPS:
        if oy < miny or oy > maxy:
            return (0, 0.0)
    else:
        t1 = (miny - oy) / dy
        t2 = (maxy - oy) / dy
        if t1 > t2:
            t1, t2 = t2, t1
        if t1 > tmin:
            tmin = t1
        if t2 < tmax:
            tmax = t2
    # z slab
    if fabs(dz) <= PARALLEL_EPS:
        if oz < minz or oz > maxz:
            return (0, 0.0)
    else:
        t1 = (minz - oz) / dz
        t2 = (maxz - oz) / dz
        if t1 > t2:
            t1, t2 = t2, t1
        if t1 > tmin:
            tmin = t1
        if t2 < tmax:
            tmax = t2
    if tmax < tmin:
        return (0, 0.0)
    return (1, tmin)
