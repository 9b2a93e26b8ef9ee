# cython: language_level=3, boundscheck=False, cdivision=True
"""Compiled geometry kernels.

Twin of ``_kernels_py``: every expression matches the pure-Python module
so both backends produce bit-identical doubles.  Built with
``-ffp-contract=off``; do not reorder arithmetic here without changing
the Python twin to match.
"""

from libc.math cimport cos, fabs, sin

BACKEND = "compiled"

cdef double PARALLEL_EPS = 1e-12
cdef double HUGE = 1.7976931348623157e308


def reflect_point(double px, double py, double pz,
                  double mx, double my, double mz,
                  double nx, double ny, double nz):
    cdef double dx = px - mx
    cdef double dy = py - my
    cdef double dz = pz - mz
    cdef double k = 2.0 * (dx * nx + dy * ny + dz * nz)
    return (px - k * nx, py - k * ny, pz - k * nz)


def reflect_direction(double dx, double dy, double dz,
                      double nx, double ny, double nz):
    cdef double k = 2.0 * (dx * nx + dy * ny + dz * nz)
    return (dx - k * nx, dy - k * ny, dz - k * nz)


def ray_plane(double ox, double oy, double oz,
              double dx, double dy, double dz,
              double px, double py, double pz,
              double nx, double ny, double nz):
    cdef double denom = dx * nx + dy * ny + dz * nz
    cdef double t
    if fabs(denom) <= PARALLEL_EPS:
        return (0, 0.0, 0.0, 0.0, 0.0)
    t = ((px - ox) * nx + (py - oy) * ny + (pz - oz) * nz) / denom
    if t < 0.0:
        return (0, 0.0, 0.0, 0.0, 0.0)
    return (1, t, ox + t * dx, oy + t * dy, oz + t * dz)


def rotate_about_axis(double px, double py, double pz,
                      double cx, double cy, double cz,
                      double ax, double ay, double az, double angle):
    cdef double vx = px - cx
    cdef double vy = py - cy
    cdef double vz = pz - cz
    cdef double c = cos(angle)
    cdef double s = sin(angle)
    cdef double one_c = 1.0 - c
    cdef double kx = ay * vz - az * vy
    cdef double ky = az * vx - ax * vz
    cdef double kz = ax * vy - ay * vx
    cdef double kdv = ax * vx + ay * vy + az * vz
    cdef double rx = vx * c + kx * s + ax * kdv * one_c
    cdef double ry = vy * c + ky * s + ay * kdv * one_c
    cdef double rz = vz * c + kz * s + az * kdv * one_c
    return (cx + rx, cy + ry, cz + rz)


def scale_about_center(double px, double py, double pz,
                       double cx, double cy, double cz, double s):
    return (cx + s * (px - cx), cy + s * (py - cy), cz + s * (pz - cz))


def apply_sketch_transform(double px, double py, double pz,
                           double vx, double vy, double vz,
                           double tx, double ty, double tz,
                           double angle, double scale):
    cdef double lx = (px - vx) * scale
    cdef double ly = (py - vy) * scale
    cdef double lz = (pz - vz) * scale
    cdef double c = cos(angle)
    cdef double s = sin(angle)
    cdef double rx = lx * c + lz * s
    cdef double rz = -lx * s + lz * c
    return (vx + tx + rx, vy + ty + ly, vz + tz + rz)


def invert_sketch_transform(double qx, double qy, double qz,
                            double vx, double vy, double vz,
                            double tx, double ty, double tz,
                            double angle, double scale):
    cdef double lx = qx - vx - tx
    cdef double ly = qy - vy - ty
    cdef double lz = qz - vz - tz
    cdef double c = cos(angle)
    cdef double s = sin(angle)
    cdef double rx = lx * c - lz * s
    cdef double rz = lx * s + lz * c
    cdef double inv = 1.0 / scale
    return (vx + rx * inv, vy + ly * inv, vz + rz * inv)


def ray_aabb(double ox, double oy, double oz,
             double dx, double dy, double dz,
             double minx, double miny, double minz,
             double maxx, double maxy, double maxz):
    cdef double tmin = 0.0
    cdef double tmax = HUGE
    cdef double t1, t2, tmp
    if fabs(dx) <= PARALLEL_EPS:
        if ox < minx or ox > maxx:
            return (0, 0.0)
    else:
        t1 = (minx - ox) / dx
        t2 = (maxx - ox) / dx
        if t1 > t2:
            tmp = t1
            t1 = t2
            t2 = tmp
        if t1 > tmin:
            tmin = t1
        if t2 < tmax:
            tmax = t2
    if fabs(dy) <= PARALLEL_EPS:
        if oy < miny or oy > maxy:
            return (0, 0.0)
    else:
        t1 = (miny - oy) / dy
        t2 = (maxy - oy) / dy
        if t1 > t2:
            tmp = t1
            t1 = t2
            t2 = tmp
        if t1 > tmin:
            tmin = t1
        if t2 < tmax:
            tmax = t2
    if fabs(dz) <= PARALLEL_EPS:
        if oz < minz or oz > maxz:
            return (0, 0.0)
    else:
        t1 = (minz - oz) / dz
        t2 = (maxz - oz) / dz
        if t1 > t2:
            tmp = t1
            t1 = t2
            t2 = tmp
        if t1 > tmin:
            tmin = t1
        if t2 < tmax:
            tmax = t2
    if tmax < tmin:
        return (0, 0.0)
    return (1, tmin)
