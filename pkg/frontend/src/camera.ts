/**
 * Desktop orbit camera: mouse orbit/pan/zoom around a target point,
 * perspective projection for the 2D canvas renderer, and inverse rays
 * for picking.  The camera pose doubles as the avatar's published head
 * pose, so remote peers (and telepathy observers) see where this
 * participant is looking.
 */

import {
  Pose,
  Vec3,
  localToWorld,
  localToWorldDir,
  lookFrame,
  worldToLocal,
} from "./geometry.js";

const PITCH_LIMIT = 1.45; // keep the look direction away from straight up/down
const MIN_DIST = 0.4;
const MAX_DIST = 12.0;
export const NEAR_PLANE = 0.05;

export interface ScreenPoint {
  x: number;
  y: number;
  /** Distance along the view axis; larger is farther. */
  depth: number;
}

export class OrbitCamera {
  constructor(
    public target: Vec3 = new Vec3(0.0, 1.2, 0.0),
    public yaw = 0.0,
    public pitch = -0.1,
    public dist = 3.5,
    public fovY = (60.0 * Math.PI) / 180.0,
  ) {}

  /** Unit vector from the camera toward the target. */
  forward(): Vec3 {
    const cp = Math.cos(this.pitch);
    return new Vec3(
      -Math.sin(this.yaw) * cp,
      -Math.sin(this.pitch),
      -Math.cos(this.yaw) * cp,
    ).normalized();
  }

  eye(): Vec3 {
    return this.target.sub(this.forward().scaled(this.dist));
  }

  /** Camera pose; also published as the avatar's head. */
  headPose(): Pose {
    return new Pose(this.eye(), lookFrame(this.forward()));
  }

  orbit(dYaw: number, dPitch: number): void {
    this.yaw += dYaw;
    this.pitch = Math.min(PITCH_LIMIT, Math.max(-PITCH_LIMIT, this.pitch + dPitch));
  }

  /** Slide the target in the camera's right/up plane. */
  pan(dRight: number, dUp: number): void {
    const frame = lookFrame(this.forward());
    this.target = this.target
      .add(frame.right.scaled(dRight))
      .add(frame.up.scaled(dUp));
  }

  zoom(factor: number): void {
    this.dist = Math.min(MAX_DIST, Math.max(MIN_DIST, this.dist * factor));
  }

  /** Project a world point to canvas pixels; null when behind the camera. */
  worldToScreen(
    p: Vec3, width: number, height: number, pose?: Pose,
  ): ScreenPoint | null {
    const local = worldToLocal(pose ?? this.headPose(), p);
    const z = local.z;
    if (z <= NEAR_PLANE) {
      return null;
    }
    const tanHalf = Math.tan(this.fovY / 2.0);
    const aspect = width / height;
    const x = width / 2.0 + ((local.x / (z * tanHalf * aspect)) * width) / 2.0;
    const y = height / 2.0 - ((local.y / (z * tanHalf)) * height) / 2.0;
    return { x, y, depth: z };
  }

  /** World-space ray through a canvas pixel (for picking). */
  screenRay(
    sx: number, sy: number, width: number, height: number,
  ): { origin: Vec3; direction: Vec3 } {
    const pose = this.headPose();
    const tanHalf = Math.tan(this.fovY / 2.0);
    const aspect = width / height;
    const ndcX = (sx - width / 2.0) / (width / 2.0);
    const ndcY = (height / 2.0 - sy) / (height / 2.0);
    const localDir = new Vec3(ndcX * tanHalf * aspect, ndcY * tanHalf, 1.0).normalized();
    return { origin: pose.position, direction: localToWorldDir(pose, localDir) };
  }

  /** A pose at `depth` along the ray through a pixel, aligned with the
   * camera frame — stands in for a hand during cursor gestures. */
  cursorPose(sx: number, sy: number, width: number, height: number, depth: number): Pose {
    const ray = this.screenRay(sx, sy, width, height);
    const pose = this.headPose();
    return new Pose(ray.origin.add(ray.direction.scaled(depth)), pose.frame);
  }

  /** Hand poses hanging naturally below and ahead of the head. */
  handPoses(): [Pose, Pose] {
    const head = this.headPose();
    const left = new Pose(localToWorld(head, new Vec3(-0.25, -0.45, 0.3)), head.frame);
    const right = new Pose(localToWorld(head, new Vec3(0.25, -0.45, 0.3)), head.frame);
    return [left, right];
  }
}
