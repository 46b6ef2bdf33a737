// Wire types for the session service. Field names mirror PROTOCOL.md
// at the repository root and must not drift from it.

export type Phase = "cue" | "stimulus" | "break" | "done";

export type Condition = "GCSS" | "Edges" | "Coloured";

export type EventName =
  | "advance"
  | "gaze"
  | "click_left"
  | "click_right"
  | "resume";

export interface Envelope<T> {
  type: string;
  session_id: string;
  payload: T;
}

export interface EventPayload {
  event: EventName;
  t?: number;
  x?: number;
  y?: number;
}

export interface DeltaPayload {
  phase: Phase;
  index: number;
  n_trials: number;
  cue?: string;
  outcome?: string;
  rt_ms?: number;
}

export interface FrameHeader {
  seq: number;
  t: number;
  encoding: "png";
}

export interface ErrorPayload {
  code: "unknown_session" | "bad_envelope" | "protocol" | "bad_payload";
  message: string;
}

export interface SessionInfo extends DeltaPayload {
  session_id: string;
  condition: Condition;
  break_after: number | null;
  frame_size: number;
  stimulus_size: [number, number];
  coordinate_space: "display";
  render_mode: string;
}

// Phase legality table, mirroring the server's state machine. The UI
// consults this before every send so an illegal-phase event never
// reaches the wire, even if a screen wires a handler at the wrong time.
const LEGAL: Record<EventName, Phase> = {
  advance: "cue",
  gaze: "stimulus",
  click_left: "stimulus",
  click_right: "stimulus",
  resume: "break",
};

export function isLegal(event: EventName, phase: Phase): boolean {
  return LEGAL[event] === phase;
}

export function isDecision(event: EventName): boolean {
  return event === "click_left" || event === "click_right";
}

export function eventEnvelope(
  sessionId: string,
  payload: EventPayload,
): Envelope<EventPayload> {
  return { type: "event", session_id: sessionId, payload };
}

export class IllegalPhaseError extends Error {
  constructor(event: EventName, phase: Phase) {
    super(`event ${event} is not legal in phase ${phase}`);
    this.name = "IllegalPhaseError";
  }
}
