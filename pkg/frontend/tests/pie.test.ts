/**
 * Six-slot radial menu geometry: slot zero sits at the top and the
 * slots proceed counterclockwise in wire order; the center is a dead
 * zone; drags map to slots by angle with wraparound.
 */
import { describe, expect, it } from "vitest";

import { PIE_SLOTS } from "../src/frames.js";
import {
  DEAD_ZONE_FRACTION, FIRST_SLOT_ANGLE, SECTOR_RAD, SLOT_COUNT, SLOT_LABELS,
  slotArc, slotAt, slotCenterAngle,
} from "../src/pie.js";

/** Screen-space drag delta for a math-convention angle (y axis down). */
function drag(angleDeg: number, r = 100): [number, number] {
  const a = (angleDeg * Math.PI) / 180;
  return [r * Math.cos(a), -r * Math.sin(a)];
}

const DEAD = 25;

describe("pie menu slots", () => {
  it("uses the six wire op names in order", () => {
    expect(SLOT_COUNT).toBe(6);
    expect([...PIE_SLOTS]).toEqual(
      ["delete", "move_away", "copy", "scale", "rotate", "move"]);
    for (const slot of PIE_SLOTS) {
      expect(SLOT_LABELS[slot].length).toBeGreaterThan(0);
    }
  });

  it("maps slot-center angles counterclockwise from the top", () => {
    const centers: Array<[number, string]> = [
      [90, "delete"],
      [150, "move_away"],
      [210, "copy"],
      [270, "scale"],
      [330, "rotate"],
      [30, "move"],
    ];
    for (const [deg, slot] of centers) {
      expect(slotAt(...drag(deg), DEAD)).toBe(slot);
    }
  });

  it("covers each sector out to its edges", () => {
    for (let i = 0; i < SLOT_COUNT; i++) {
      const centerDeg = ((FIRST_SLOT_ANGLE + i * SECTOR_RAD) * 180) / Math.PI;
      for (const off of [-29, -15, 0, 15, 29]) {
        expect(slotAt(...drag(centerDeg + off), DEAD)).toBe(PIE_SLOTS[i]);
      }
    }
  });

  it("wraps angles around the circle", () => {
    expect(slotAt(...drag(450), DEAD)).toBe("delete");   // 450 == 90
    expect(slotAt(...drag(-330), DEAD)).toBe("move");    // -330 == 30
    expect(slotAt(...drag(-90), DEAD)).toBe("scale");    // -90 == 270
    expect(slotAt(...drag(750), DEAD)).toBe("move");     // 750 == 30
  });

  it("treats the center as a dead zone", () => {
    expect(slotAt(0, 0, DEAD)).toBeNull();
    expect(slotAt(...drag(90, DEAD - 1), DEAD)).toBeNull();
    expect(slotAt(...drag(90, DEAD + 1), DEAD)).toBe("delete");
    expect(DEAD_ZONE_FRACTION).toBeGreaterThan(0);
    expect(DEAD_ZONE_FRACTION).toBeLessThan(1);
  });

  it("keeps slotCenterAngle and slotArc consistent with slotAt", () => {
    for (let i = 0; i < SLOT_COUNT; i++) {
      const mid = slotCenterAngle(i);
      expect(slotAt(100 * Math.cos(mid), -100 * Math.sin(mid), DEAD))
        .toBe(PIE_SLOTS[i]);
      const [a0, a1] = slotArc(i);
      expect(a1 - a0).toBeCloseTo(SECTOR_RAD, 12);
      expect((a0 + a1) / 2).toBeCloseTo(mid, 12);
    }
  });
});
