/**
 * 3D math used by the replica and the renderer: vectors, orthonormal
 * frames, poses, planes, rays.
 *
 * Convention: right-handed, y-up, meters.  Board-local frames are
 * right = +x, up = +y, outward normal = +z.
 *
 * Replicas on every platform must agree bit-for-bit on replicated
 * state, so each kernel keeps the exact expression order of its
 * counterparts elsewhere; IEEE-754 doubles evaluated one operation at
 * a time make the results identical.
 */

import { JValue, Real, num, real } from "./canonical.js";

export const FRAME_EPS = 1e-9;
const PARALLEL_EPS = 1e-12;

export class GeometryError extends Error {}

export class Vec3 {
  constructor(readonly x: number, readonly y: number, readonly z: number) {}

  add(o: Vec3): Vec3 {
    return new Vec3(this.x + o.x, this.y + o.y, this.z + o.z);
  }

  sub(o: Vec3): Vec3 {
    return new Vec3(this.x - o.x, this.y - o.y, this.z - o.z);
  }

  neg(): Vec3 {
    return new Vec3(-this.x, -this.y, -this.z);
  }

  scaled(s: number): Vec3 {
    return new Vec3(this.x * s, this.y * s, this.z * s);
  }

  dot(o: Vec3): number {
    return this.x * o.x + this.y * o.y + this.z * o.z;
  }

  cross(o: Vec3): Vec3 {
    return new Vec3(
      this.y * o.z - this.z * o.y,
      this.z * o.x - this.x * o.z,
      this.x * o.y - this.y * o.x,
    );
  }

  norm(): number {
    return Math.sqrt(this.x * this.x + this.y * this.y + this.z * this.z);
  }

  normalized(): Vec3 {
    const n = this.norm();
    if (n <= 0.0) throw new GeometryError("cannot normalize zero vector");
    return new Vec3(this.x / n, this.y / n, this.z / n);
  }

  isFinite(): boolean {
    return Number.isFinite(this.x) && Number.isFinite(this.y) && Number.isFinite(this.z);
  }

  components(): [number, number, number] {
    return [this.x, this.y, this.z];
  }

  toList(): JValue[] {
    return [real(this.x), real(this.y), real(this.z)];
  }

  static fromList(v: JValue): Vec3 {
    if (!Array.isArray(v) || v.length !== 3) {
      throw new GeometryError(`expected [x, y, z], got ${JSON.stringify(v)}`);
    }
    const parse = (c: JValue): number => {
      if (typeof c === "boolean" || typeof c === "string" || c === null ||
          Array.isArray(c) || (typeof c === "object" && !(c instanceof Real))) {
        throw new GeometryError(`non-numeric vector component ${JSON.stringify(c)}`);
      }
      return num(c);
    };
    const out = new Vec3(parse(v[0]), parse(v[1]), parse(v[2]));
    if (!out.isFinite()) {
      throw new GeometryError(`non-finite vector ${JSON.stringify(v)}`);
    }
    return out;
  }
}

export const ZERO = new Vec3(0.0, 0.0, 0.0);
export const X_AXIS = new Vec3(1.0, 0.0, 0.0);
export const Y_AXIS = new Vec3(0.0, 1.0, 0.0);
export const Z_AXIS = new Vec3(0.0, 0.0, 1.0);

/** Orthonormal orientation basis.  Right-handed: right x up = forward. */
export class Frame {
  constructor(readonly right: Vec3, readonly up: Vec3, readonly forward: Vec3) {}

  validate(): void {
    for (const axis of [this.right, this.up, this.forward]) {
      if (!axis.isFinite()) throw new GeometryError("non-finite frame axis");
      if (Math.abs(axis.norm() - 1.0) > FRAME_EPS) {
        throw new GeometryError(`frame axis not unit length: ${axis.components()}`);
      }
    }
    if (Math.abs(this.right.dot(this.up)) > FRAME_EPS) {
      throw new GeometryError("right/up not orthogonal");
    }
    if (Math.abs(this.right.dot(this.forward)) > FRAME_EPS) {
      throw new GeometryError("right/forward not orthogonal");
    }
    if (Math.abs(this.up.dot(this.forward)) > FRAME_EPS) {
      throw new GeometryError("up/forward not orthogonal");
    }
  }

  handedness(): number {
    return this.right.cross(this.up).dot(this.forward) >= 0.0 ? 1.0 : -1.0;
  }

  toDict(): JValue {
    return {
      right: this.right.toList(),
      up: this.up.toList(),
      fwd: this.forward.toList(),
    };
  }

  static fromDict(d: { [k: string]: JValue }): Frame {
    return new Frame(
      Vec3.fromList(d["right"]),
      Vec3.fromList(d["up"]),
      Vec3.fromList(d["fwd"]),
    );
  }
}

export const IDENTITY_FRAME = new Frame(X_AXIS, Y_AXIS, Z_AXIS);

export class Pose {
  constructor(readonly position: Vec3, readonly frame: Frame) {}

  get forward(): Vec3 {
    return this.frame.forward;
  }

  get up(): Vec3 {
    return this.frame.up;
  }

  get right(): Vec3 {
    return this.frame.right;
  }

  validate(): void {
    if (!this.position.isFinite()) throw new GeometryError("non-finite pose position");
    this.frame.validate();
  }

  toDict(): { [k: string]: JValue } {
    return {
      right: this.frame.right.toList(),
      up: this.frame.up.toList(),
      fwd: this.frame.forward.toList(),
      pos: this.position.toList(),
    };
  }

  static fromDict(d: { [k: string]: JValue }): Pose {
    return new Pose(Vec3.fromList(d["pos"]), Frame.fromDict(d));
  }
}

export class Plane {
  constructor(readonly point: Vec3, readonly normal: Vec3) {}

  validate(): void {
    if (!(this.point.isFinite() && this.normal.isFinite())) {
      throw new GeometryError("non-finite plane");
    }
    if (Math.abs(this.normal.norm() - 1.0) > FRAME_EPS) {
      throw new GeometryError("plane normal not unit length");
    }
  }

  signedDistance(p: Vec3): number {
    return p.sub(this.point).dot(this.normal);
  }
}

export class Ray {
  constructor(readonly origin: Vec3, readonly direction: Vec3) {}

  at(t: number): Vec3 {
    return this.origin.add(this.direction.scaled(t));
  }

  toDict(): JValue {
    return { origin: this.origin.toList(), dir: this.direction.toList() };
  }

  static fromDict(d: { [k: string]: JValue }): Ray {
    return new Ray(Vec3.fromList(d["origin"]), Vec3.fromList(d["dir"]));
  }
}

/** Right-handed frame looking along `forward`, roll-aligned to `upHint`. */
export function lookFrame(forward: Vec3, upHint: Vec3 = Y_AXIS): Frame {
  const f = forward.normalized();
  let r = upHint.cross(f);
  if (r.norm() <= 1e-9) {
    // forward is (anti)parallel to the hint; fall back to world z.
    r = Z_AXIS.cross(f);
  }
  r = r.normalized();
  const u = f.cross(r);
  return new Frame(r, u, f);
}

export function poseAt(position: Vec3, forward: Vec3, upHint: Vec3 = Y_AXIS): Pose {
  return new Pose(position, lookFrame(forward, upHint));
}

// ---------------------------------------------------------------------------
// Reflection across a plane
// ---------------------------------------------------------------------------

/** Mirror image of point `p` across plane `m`; points on the plane are fixed. */
export function reflectPoint(p: Vec3, m: Plane): Vec3 {
  const dx = p.x - m.point.x;
  const dy = p.y - m.point.y;
  const dz = p.z - m.point.z;
  const k = 2.0 * (dx * m.normal.x + dy * m.normal.y + dz * m.normal.z);
  return new Vec3(p.x - k * m.normal.x, p.y - k * m.normal.y, p.z - k * m.normal.z);
}

/** Mirror image of direction `d`; the norm is preserved. */
export function reflectDirection(d: Vec3, m: Plane): Vec3 {
  const k = 2.0 * (d.x * m.normal.x + d.y * m.normal.y + d.z * m.normal.z);
  return new Vec3(d.x - k * m.normal.x, d.y - k * m.normal.y, d.z - k * m.normal.z);
}

/**
 * Mirror a pose across a plane.  Position, forward and up are reflected;
 * a true mirror image flips handedness, so `right` is recomputed as
 * up x forward to return a right-handed frame.
 */
export function reflectPose(pose: Pose, m: Plane): Pose {
  const pos = reflectPoint(pose.position, m);
  const fwd = reflectDirection(pose.frame.forward, m);
  const up = reflectDirection(pose.frame.up, m);
  const right = up.cross(fwd);
  return new Pose(pos, new Frame(right, up, fwd));
}

/**
 * Forward intersection of ray and plane: `{point, t}` with t >= 0, or
 * null when the ray is parallel or the hit lies behind the origin.
 */
export function rayPlaneIntersect(r: Ray, m: Plane): { point: Vec3; t: number } | null {
  const denom = r.direction.x * m.normal.x + r.direction.y * m.normal.y +
    r.direction.z * m.normal.z;
  if (Math.abs(denom) <= PARALLEL_EPS) return null;
  const t = ((m.point.x - r.origin.x) * m.normal.x +
    (m.point.y - r.origin.y) * m.normal.y +
    (m.point.z - r.origin.z) * m.normal.z) / denom;
  if (t < 0.0) return null;
  return {
    point: new Vec3(
      r.origin.x + t * r.direction.x,
      r.origin.y + t * r.direction.y,
      r.origin.z + t * r.direction.z,
    ),
    t,
  };
}

// ---------------------------------------------------------------------------
// Manipulation transforms
// ---------------------------------------------------------------------------

/** Rodrigues rotation of `p` about the unit `axis` through `center`. */
export function rotateAboutAxis(p: Vec3, center: Vec3, axis: Vec3, angle: number): Vec3 {
  const vx = p.x - center.x;
  const vy = p.y - center.y;
  const vz = p.z - center.z;
  const c = Math.cos(angle);
  const s = Math.sin(angle);
  const oneC = 1.0 - c;
  const kx = axis.y * vz - axis.z * vy;
  const ky = axis.z * vx - axis.x * vz;
  const kz = axis.x * vy - axis.y * vx;
  const kdv = axis.x * vx + axis.y * vy + axis.z * vz;
  const rx = vx * c + kx * s + axis.x * kdv * oneC;
  const ry = vy * c + ky * s + axis.y * kdv * oneC;
  const rz = vz * c + kz * s + axis.z * kdv * oneC;
  return new Vec3(center.x + rx, center.y + ry, center.z + rz);
}

/** Uniform scale of `p` about `center`.  Rejects s <= 0. */
export function scaleAboutCenter(p: Vec3, center: Vec3, s: number): Vec3 {
  if (!(s > 0.0 && Number.isFinite(s))) {
    throw new GeometryError(`scale factor must be positive and finite, got ${s}`);
  }
  return new Vec3(
    center.x + s * (p.x - center.x),
    center.y + s * (p.y - center.y),
    center.z + s * (p.z - center.z),
  );
}

/**
 * Scale then yaw (about +y through `pivot`) then translate — the
 * transform every sketch carries: q = v + t + Ry(angle) * (s * (p - v)).
 */
export function applySketchTransform(
  p: Vec3, pivot: Vec3, translation: Vec3, angle: number, scale: number,
): Vec3 {
  const lx = (p.x - pivot.x) * scale;
  const ly = (p.y - pivot.y) * scale;
  const lz = (p.z - pivot.z) * scale;
  const c = Math.cos(angle);
  const s = Math.sin(angle);
  const rx = lx * c + lz * s;
  const rz = -lx * s + lz * c;
  return new Vec3(
    pivot.x + translation.x + rx,
    pivot.y + translation.y + ly,
    pivot.z + translation.z + rz,
  );
}

/** Inverse of {@link applySketchTransform} (scale must be nonzero). */
export function invertSketchTransform(
  q: Vec3, pivot: Vec3, translation: Vec3, angle: number, scale: number,
): Vec3 {
  const lx = q.x - pivot.x - translation.x;
  const ly = q.y - pivot.y - translation.y;
  const lz = q.z - pivot.z - translation.z;
  const c = Math.cos(angle);
  const s = Math.sin(angle);
  const rx = lx * c - lz * s;
  const rz = lx * s + lz * c;
  const inv = 1.0 / scale;
  return new Vec3(pivot.x + rx * inv, pivot.y + ly * inv, pivot.z + rz * inv);
}

/**
 * Entry parameter of a ray into an axis-aligned box, or null on a miss.
 * Returns 0.0 when the origin is already inside the box.
 */
export function rayAabbIntersect(r: Ray, boxMin: Vec3, boxMax: Vec3): number | null {
  let tmin = 0.0;
  let tmax = 1.7976931348623157e308;
  const o = [r.origin.x, r.origin.y, r.origin.z];
  const d = [r.direction.x, r.direction.y, r.direction.z];
  const lo = [boxMin.x, boxMin.y, boxMin.z];
  const hi = [boxMax.x, boxMax.y, boxMax.z];
  for (let i = 0; i < 3; i++) {
    if (Math.abs(d[i]) <= PARALLEL_EPS) {
      if (o[i] < lo[i] || o[i] > hi[i]) return null;
    } else {
      let t1 = (lo[i] - o[i]) / d[i];
      let t2 = (hi[i] - o[i]) / d[i];
      if (t1 > t2) {
        const tmp = t1;
        t1 = t2;
        t2 = tmp;
      }
      if (t1 > tmin) tmin = t1;
      if (t2 < tmax) tmax = t2;
    }
  }
  if (tmax < tmin) return null;
  return tmin;
}

// ---------------------------------------------------------------------------
// Local frames
// ---------------------------------------------------------------------------

/** Express world point `p` in the local coordinates of `pose`. */
export function worldToLocal(pose: Pose, p: Vec3): Vec3 {
  const d = p.sub(pose.position);
  return new Vec3(d.dot(pose.frame.right), d.dot(pose.frame.up), d.dot(pose.frame.forward));
}

/** Map a point from the local coordinates of `pose` back to world space. */
export function localToWorld(pose: Pose, p: Vec3): Vec3 {
  const r = pose.frame.right;
  const u = pose.frame.up;
  const f = pose.frame.forward;
  return new Vec3(
    pose.position.x + p.x * r.x + p.y * u.x + p.z * f.x,
    pose.position.y + p.x * r.y + p.y * u.y + p.z * f.y,
    pose.position.z + p.x * r.z + p.y * u.z + p.z * f.z,
  );
}

export function worldToLocalDir(pose: Pose, d: Vec3): Vec3 {
  return new Vec3(d.dot(pose.frame.right), d.dot(pose.frame.up), d.dot(pose.frame.forward));
}

export function localToWorldDir(pose: Pose, d: Vec3): Vec3 {
  const r = pose.frame.right;
  const u = pose.frame.up;
  const f = pose.frame.forward;
  return new Vec3(
    d.x * r.x + d.y * u.x + d.z * f.x,
    d.x * r.y + d.y * u.y + d.z * f.y,
    d.x * r.z + d.y * u.z + d.z * f.z,
  );
}
