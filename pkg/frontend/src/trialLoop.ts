import type { SessionClient } from "./client.js";

export interface TrialDecision {
  kind: "left" | "right";
  x?: number;
  y?: number;
}

// Scripted behaviour for automated runs: how the synthetic participant
// looks around and what it answers. Indices are trial numbers.
export interface TrialPolicy {
  gazePoints(trial: number): Array<[number, number]>;
  decide(trial: number): TrialDecision;
  trialMs?(trial: number): number;
}

export interface RunStats {
  trials: number;
  outcomes: Record<string, number>;
  breaks: number;
  framesFetched: number;
  framesDropped: number;
  eventsSent: number;
}

// Drive a whole session with a policy. Every send goes through the
// phase guard in SessionClient, so a loop bug that tried to act in the
// wrong phase would throw IllegalPhaseError before touching the wire.
export async function runSession(
  client: SessionClient,
  policy: TrialPolicy,
  fetchFrames = true,
): Promise<RunStats> {
  const stats: RunStats = {
    trials: 0,
    outcomes: {},
    breaks: 0,
    framesFetched: 0,
    framesDropped: 0,
    eventsSent: 0,
  };
  let t = 0;
  const view = client.view;
  while (view.phase !== "done") {
    if (view.phase === "cue") {
      await client.advance(t);
      continue;
    }
    if (view.phase === "break") {
      stats.breaks += 1;
      await client.resume();
      continue;
    }
    // stimulus
    const trial = view.index;
    for (const [x, y] of policy.gazePoints(trial)) {
      t += 16;
      await client.gaze(t, x, y);
      if (fetchFrames) {
        const frame = await client.fetchFrame(x, y);
        if (frame !== null) stats.framesFetched += 1;
      }
    }
    t += policy.trialMs ? policy.trialMs(trial) : 1000;
    const decision = policy.decide(trial);
    const delta =
      decision.kind === "left"
        ? await client.clickLeft(t, decision.x ?? 0, decision.y ?? 0)
        : await client.clickRight(t);
    stats.trials += 1;
    if (delta.outcome) {
      stats.outcomes[delta.outcome] = (stats.outcomes[delta.outcome] ?? 0) + 1;
    }
    t += 250;
  }
  stats.framesDropped = view.framesDropped;
  stats.eventsSent = client.eventsSent;
  return stats;
}

// Deterministic PRNG so conformance runs are reproducible end to end.
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let x = a;
    x = Math.imul(x ^ (x >>> 15), x | 1);
    x ^= x + Math.imul(x ^ (x >>> 7), x | 61);
    return ((x ^ (x >>> 14)) >>> 0) / 4294967296;
  };
}

export function scriptedPolicy(seed: number, frameSize: number): TrialPolicy {
  const rand = mulberry32(seed);
  return {
    gazePoints(trial: number) {
      const n = 2 + Math.floor(rand() * 4);
      const points: Array<[number, number]> = [];
      for (let i = 0; i < n; i++) {
        points.push([
          Math.floor(rand() * frameSize),
          Math.floor(rand() * frameSize),
        ]);
      }
      return points;
    },
    decide(trial: number) {
      // Mix of localization clicks and absent reports; correctness is
      // the server's concern, legality is ours.
      if (rand() < 0.5) {
        return {
          kind: "left" as const,
          x: Math.floor(rand() * frameSize),
          y: Math.floor(rand() * frameSize),
        };
      }
      return { kind: "right" as const };
    },
    trialMs: () => 800 + Math.floor(rand() * 400),
  };
}
