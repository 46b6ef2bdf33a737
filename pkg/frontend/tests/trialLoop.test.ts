import { describe, expect, it } from "vitest";

import type { SessionClient } from "../src/client.js";
import {
  IllegalPhaseError,
  isLegal,
  type DeltaPayload,
  type EventName,
  type Phase,
} from "../src/protocol.js";
import { mulberry32, runSession, scriptedPolicy, type TrialPolicy } from "../src/trialLoop.js";
import { ClientSessionView } from "../src/view.js";

// In-memory stand-in for the server: applies the same phase machine
// and throws IllegalPhaseError on any out-of-phase send, so a loop bug
// that emitted an illegal event would fail these tests immediately.
class FakeClient {
  view: ClientSessionView;
  eventsSent = 0;
  gazeLog: Array<[number, number, number]> = [];
  decisions: string[] = [];
  frameCalls = 0;
  private lastIssuedSeq = 0;

  constructor(
    nTrials: number,
    breakAfter: number | null,
    private readonly staleFrameCall = -1,
  ) {
    this.view = new ClientSessionView({
      session_id: "fake",
      condition: breakAfter === null ? "Coloured" : "GCSS",
      break_after: breakAfter,
      frame_size: 640,
      stimulus_size: [1024, 1024],
      coordinate_space: "display",
      render_mode: "screen_centered",
      phase: "cue",
      index: 0,
      n_trials: nTrials,
      cue: "cue 0",
    });
  }

  private guard(event: EventName): void {
    if (!isLegal(event, this.view.phase)) {
      throw new IllegalPhaseError(event, this.view.phase);
    }
    this.eventsSent += 1;
  }

  private apply(delta: DeltaPayload): DeltaPayload {
    this.view.applyDelta(delta);
    return delta;
  }

  async advance(_t: number): Promise<DeltaPayload> {
    this.guard("advance");
    return this.apply({
      phase: "stimulus",
      index: this.view.index,
      n_trials: this.view.nTrials,
    });
  }

  async gaze(t: number, x: number, y: number): Promise<DeltaPayload> {
    this.guard("gaze");
    this.gazeLog.push([t, x, y]);
    return this.apply({
      phase: "stimulus",
      index: this.view.index,
      n_trials: this.view.nTrials,
    });
  }

  private decide(event: "click_left" | "click_right", outcome: string): DeltaPayload {
    this.guard(event);
    this.decisions.push(event);
    const next = this.view.index + 1;
    let phase: Phase = "cue";
    if (next >= this.view.nTrials) phase = "done";
    else if (this.view.breakAfter !== null && next === this.view.breakAfter) {
      phase = "break";
    }
    const delta: DeltaPayload = {
      phase,
      index: phase === "done" ? this.view.index : next,
      n_trials: this.view.nTrials,
      outcome,
      rt_ms: 500,
    };
    if (phase === "cue") delta.cue = `cue ${next}`;
    return this.apply(delta);
  }

  async clickLeft(_t: number, _x: number, _y: number): Promise<DeltaPayload> {
    return this.decide("click_left", "TP");
  }

  async clickRight(_t: number): Promise<DeltaPayload> {
    return this.decide("click_right", "TN");
  }

  async resume(): Promise<DeltaPayload> {
    this.guard("resume");
    return this.apply({
      phase: "cue",
      index: this.view.index,
      n_trials: this.view.nTrials,
      cue: `cue ${this.view.index}`,
    });
  }

  async fetchFrame(_x: number, _y: number): Promise<ArrayBuffer | null> {
    this.frameCalls += 1;
    const seq =
      this.frameCalls === this.staleFrameCall
        ? this.lastIssuedSeq
        : ++this.lastIssuedSeq;
    return this.view.acceptFrame(seq) ? new ArrayBuffer(8) : null;
  }
}

const asClient = (fake: FakeClient) => fake as unknown as SessionClient;

const fixedPolicy: TrialPolicy = {
  gazePoints: () => [
    [100, 100],
    [200, 200],
  ],
  decide: (trial) =>
    trial % 2 === 0 ? { kind: "left", x: 320, y: 320 } : { kind: "right" },
  trialMs: () => 1000,
};

describe("runSession", () => {
  it("drives a session with a break through to done without an illegal send", async () => {
    const fake = new FakeClient(5, 2);
    const stats = await runSession(asClient(fake), fixedPolicy);
    expect(fake.view.phase).toBe("done");
    expect(stats.trials).toBe(5);
    expect(stats.breaks).toBe(1);
    expect(stats.outcomes).toEqual({ TP: 3, TN: 2 });
    expect(stats.framesFetched).toBe(10);
    expect(stats.framesDropped).toBe(0);
    // 5 advances + 10 gazes + 5 decisions + 1 resume
    expect(stats.eventsSent).toBe(21);
  });

  it("never pauses when the plan has no break", async () => {
    const fake = new FakeClient(4, null);
    const stats = await runSession(asClient(fake), fixedPolicy);
    expect(stats.breaks).toBe(0);
    expect(stats.trials).toBe(4);
  });

  it("counts dropped frames instead of treating them as fetched", async () => {
    const fake = new FakeClient(3, null, 4); // 4th frame repeats a sequence number
    const stats = await runSession(asClient(fake), fixedPolicy);
    expect(fake.frameCalls).toBe(6);
    expect(stats.framesFetched).toBe(5);
    expect(stats.framesDropped).toBe(1);
  });

  it("skips frame fetching when disabled", async () => {
    const fake = new FakeClient(3, null);
    const stats = await runSession(asClient(fake), fixedPolicy, false);
    expect(fake.frameCalls).toBe(0);
    expect(stats.framesFetched).toBe(0);
    expect(stats.trials).toBe(3);
  });
});

describe("scripted policies", () => {
  it("mulberry32 is deterministic per seed", () => {
    const a = mulberry32(42);
    const b = mulberry32(42);
    const c = mulberry32(43);
    const seqA = [a(), a(), a()];
    const seqB = [b(), b(), b()];
    const seqC = [c(), c(), c()];
    expect(seqA).toEqual(seqB);
    expect(seqA).not.toEqual(seqC);
    for (const v of seqA) {
      expect(v).toBeGreaterThanOrEqual(0);
      expect(v).toBeLessThan(1);
    }
  });

  it("scriptedPolicy replays identically for the same seed", async () => {
    const runs: Array<{ gaze: Array<[number, number, number]>; decisions: string[] }> = [];
    for (let i = 0; i < 2; i++) {
      const fake = new FakeClient(6, null);
      await runSession(asClient(fake), scriptedPolicy(9, 640), false);
      runs.push({ gaze: fake.gazeLog, decisions: fake.decisions });
    }
    expect(runs[0]).toEqual(runs[1]);
  });

  it("scriptedPolicy stays inside the canvas", () => {
    const policy = scriptedPolicy(3, 640);
    for (let trial = 0; trial < 20; trial++) {
      for (const [x, y] of policy.gazePoints(trial)) {
        expect(x).toBeGreaterThanOrEqual(0);
        expect(x).toBeLessThan(640);
        expect(y).toBeGreaterThanOrEqual(0);
        expect(y).toBeLessThan(640);
      }
      const d = policy.decide(trial);
      if (d.kind === "left") {
        expect(d.x).toBeGreaterThanOrEqual(0);
        expect(d.x).toBeLessThan(640);
      }
    }
  });
});
