import { describe, expect, it } from "vitest";

import { GazeSampler } from "../src/gazeSampler.js";

// Harness standing in for requestAnimationFrame: flush callbacks are
// collected and run by hand so tests control frame boundaries.
function sampler(size = 640) {
  const emitted: Array<[number, number]> = [];
  const flushes: Array<() => void> = [];
  const s = new GazeSampler(
    size,
    (x, y) => emitted.push([x, y]),
    (flush) => flushes.push(flush),
  );
  return { s, emitted, flushes };
}

describe("GazeSampler", () => {
  it("coalesces a burst of pointer moves into one emit per frame", () => {
    const { s, emitted, flushes } = sampler();
    s.pointerMove(10, 10);
    s.pointerMove(20, 20);
    s.pointerMove(30, 40);
    // Many moves, one scheduled flush.
    expect(flushes.length).toBe(1);
    expect(emitted.length).toBe(0);
    flushes[0]();
    // Only the most recent position goes out.
    expect(emitted).toEqual([[30, 40]]);
  });

  it("schedules again after a flush", () => {
    const { s, emitted, flushes } = sampler();
    s.pointerMove(1, 2);
    flushes[0]();
    s.pointerMove(3, 4);
    expect(flushes.length).toBe(2);
    flushes[1]();
    expect(emitted).toEqual([
      [1, 2],
      [3, 4],
    ]);
  });

  it("does not emit twice if a stale flush runs again", () => {
    const { s, emitted, flushes } = sampler();
    s.pointerMove(5, 6);
    flushes[0]();
    flushes[0]();
    expect(emitted).toEqual([[5, 6]]);
  });

  it("clamps coordinates to the canvas", () => {
    const { s, emitted, flushes } = sampler(640);
    s.pointerMove(-50, 700);
    flushes[0]();
    expect(emitted).toEqual([[0, 639]]);

    s.pointerMove(640, -0.5);
    flushes[1]();
    expect(emitted[1]).toEqual([639, 0]);
  });

  it("passes in-range coordinates through unchanged", () => {
    const { s, emitted, flushes } = sampler();
    s.pointerMove(0, 639);
    flushes[0]();
    expect(emitted).toEqual([[0, 639]]);
  });
});
