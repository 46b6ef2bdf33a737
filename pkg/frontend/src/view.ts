import type { DeltaPayload, Phase, SessionInfo } from "./protocol.js";

// Client-side mirror of the server session. All UI decisions (which
// screen to show, whether a send is legal, whether a frame is stale)
// read from this one object; only server deltas write to it.
export class ClientSessionView {
  readonly sessionId: string;
  readonly condition: string;
  readonly nTrials: number;
  readonly breakAfter: number | null;
  readonly frameSize: number;
  phase: Phase;
  index: number;
  cue: string | null;
  lastSeq = 0;
  framesDropped = 0;

  constructor(info: SessionInfo) {
    this.sessionId = info.session_id;
    this.condition = info.condition;
    this.nTrials = info.n_trials;
    this.breakAfter = info.break_after;
    this.frameSize = info.frame_size;
    this.phase = info.phase;
    this.index = info.index;
    this.cue = info.cue ?? null;
  }

  applyDelta(delta: DeltaPayload): void {
    this.phase = delta.phase;
    this.index = delta.index;
    // The cue only travels in cue-phase deltas; keep the last one
    // visible through the stimulus so the overlay can keep showing it.
    if (delta.cue !== undefined) this.cue = delta.cue;
  }

  // Frames can arrive out of order (HTTP races, stream backlog after a
  // reconnect). A frame is painted only if its sequence number moves
  // forward; stale frames are counted and dropped.
  acceptFrame(seq: number): boolean {
    if (seq <= this.lastSeq) {
      this.framesDropped += 1;
      return false;
    }
    this.lastSeq = seq;
    return true;
  }
}
