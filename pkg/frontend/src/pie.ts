/**
 * Six-slot radial (pie) menu geometry.
 *
 * Slot 0 sits at the top of the menu and the remaining slots follow
 * counterclockwise, each owning a 60-degree sector.  A dead zone around
 * the center maps to no slot, so a press does not instantly commit to
 * one.  Pure math; rendering and the drag gesture live elsewhere.
 */

import { PIE_SLOTS, PieSlot } from "./frames.js";

export const SLOT_COUNT = PIE_SLOTS.length; // 6
export const SECTOR_RAD = (2.0 * Math.PI) / SLOT_COUNT;
/** Math angle of slot 0's center (the top of the menu). */
export const FIRST_SLOT_ANGLE = Math.PI / 2.0;
/** Default dead-zone radius as a fraction of the menu radius. */
export const DEAD_ZONE_FRACTION = 0.25;

export const SLOT_LABELS: Record<PieSlot, string> = {
  delete: "Delete",
  move_away: "Push",
  copy: "Copy",
  scale: "Scale",
  rotate: "Rotate",
  move: "Move",
};

/** Center angle of a slot in math convention (radians, CCW from +x). */
export function slotCenterAngle(index: number): number {
  return FIRST_SLOT_ANGLE + index * SECTOR_RAD;
}

/** Sector bounds [start, end] of a slot in math convention. */
export function slotArc(index: number): [number, number] {
  const c = slotCenterAngle(index);
  return [c - SECTOR_RAD / 2.0, c + SECTOR_RAD / 2.0];
}

/**
 * The slot under a pointer offset from the menu center, or null inside
 * the dead zone.  `dx`/`dy` are in screen pixels (y grows downward).
 */
export function slotAt(dx: number, dy: number, deadRadius: number): PieSlot | null {
  if (Math.hypot(dx, dy) < deadRadius) {
    return null;
  }
  const angle = Math.atan2(-dy, dx); // screen y-down -> math convention
  const rel = Math.round((angle - FIRST_SLOT_ANGLE) / SECTOR_RAD);
  const index = ((rel % SLOT_COUNT) + SLOT_COUNT) % SLOT_COUNT;
  return PIE_SLOTS[index];
}
