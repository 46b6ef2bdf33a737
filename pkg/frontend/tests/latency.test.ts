import { describe, expect, it } from "vitest";

import { LatencyMeter } from "../src/latency.js";

describe("LatencyMeter", () => {
  it("has no median before any sample", () => {
    const m = new LatencyMeter();
    expect(m.median()).toBeNull();
    expect(m.count).toBe(0);
  });

  it("ignores paints with no preceding pointer move", () => {
    const m = new LatencyMeter();
    m.framePainted(100);
    expect(m.count).toBe(0);
  });

  it("pairs each paint with the most recent pointer move once", () => {
    const m = new LatencyMeter();
    m.pointerMoved(100);
    m.framePainted(116);
    expect(m.median()).toBe(16);
    // The move was consumed; a second paint records nothing.
    m.framePainted(130);
    expect(m.count).toBe(1);

    // Only the latest move before a paint counts.
    m.pointerMoved(200);
    m.pointerMoved(210);
    m.framePainted(220);
    expect(m.count).toBe(2);
    expect(m.median()).toBe(13); // mean of 16 and 10
  });

  it("reports the middle sample for odd counts", () => {
    const m = new LatencyMeter();
    for (const [move, paint] of [
      [0, 16],
      [100, 110],
      [200, 250],
    ]) {
      m.pointerMoved(move);
      m.framePainted(paint);
    }
    expect(m.median()).toBe(16); // sorted [10, 16, 50]
  });

  it("evicts the oldest sample past the window", () => {
    const m = new LatencyMeter(3);
    const pairs: Array<[number, number]> = [
      [0, 16], // 16
      [100, 110], // 10
      [200, 250], // 50
      [300, 304], // 4, evicts 16
    ];
    for (const [move, paint] of pairs) {
      m.pointerMoved(move);
      m.framePainted(paint);
    }
    expect(m.count).toBe(3);
    expect(m.median()).toBe(10); // sorted [4, 10, 50]
  });
});
