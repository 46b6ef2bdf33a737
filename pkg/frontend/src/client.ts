import {
  eventEnvelope,
  isLegal,
  IllegalPhaseError,
  type Condition,
  type DeltaPayload,
  type Envelope,
  type EventName,
  type EventPayload,
  type SessionInfo,
} from "./protocol.js";
import { ClientSessionView } from "./view.js";

export interface CreateOptions {
  condition: Condition;
  seed: number;
  policy?: string;
  input_source?: string;
  sim?: Record<string, number>;
}

export class ServerRejection extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`server rejected request: ${status} ${detail}`);
    this.name = "ServerRejection";
  }
}

async function reject(resp: Response): Promise<never> {
  let detail = resp.statusText;
  try {
    const body = (await resp.json()) as { detail?: string };
    if (body.detail) detail = body.detail;
  } catch {
    // non-JSON error body; statusText stands
  }
  throw new ServerRejection(resp.status, detail);
}

// HTTP client for one session. Every event send is phase-guarded
// against the local view, so the guard and the state mirror cannot
// disagree about what was legal at send time.
export class SessionClient {
  readonly view: ClientSessionView;
  eventsSent = 0;

  private constructor(
    readonly baseUrl: string,
    readonly info: SessionInfo,
  ) {
    this.view = new ClientSessionView(info);
  }

  static async create(
    baseUrl: string,
    options: CreateOptions,
  ): Promise<SessionClient> {
    const resp = await fetch(`${baseUrl}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(options),
    });
    if (!resp.ok) await reject(resp);
    const info = (await resp.json()) as SessionInfo;
    return new SessionClient(baseUrl, info);
  }

  get sessionId(): string {
    return this.view.sessionId;
  }

  async sendEvent(payload: EventPayload): Promise<DeltaPayload> {
    if (!isLegal(payload.event, this.view.phase)) {
      throw new IllegalPhaseError(payload.event, this.view.phase);
    }
    const resp = await fetch(`${this.baseUrl}/sessions/${this.sessionId}/events`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(eventEnvelope(this.sessionId, payload)),
    });
    if (!resp.ok) await reject(resp);
    this.eventsSent += 1;
    const delta = ((await resp.json()) as Envelope<DeltaPayload>).payload;
    this.view.applyDelta(delta);
    return delta;
  }

  advance(t: number): Promise<DeltaPayload> {
    return this.sendEvent({ event: "advance", t });
  }

  gaze(t: number, x: number, y: number): Promise<DeltaPayload> {
    return this.sendEvent({ event: "gaze", t, x, y });
  }

  clickLeft(t: number, x: number, y: number): Promise<DeltaPayload> {
    return this.sendEvent({ event: "click_left", t, x, y });
  }

  clickRight(t: number): Promise<DeltaPayload> {
    return this.sendEvent({ event: "click_right", t });
  }

  resume(): Promise<DeltaPayload> {
    return this.sendEvent({ event: "resume" });
  }

  // One rendered frame for the given display-space gaze. Returns null
  // if the frame lost the sequence race and was dropped.
  async fetchFrame(x: number, y: number): Promise<ArrayBuffer | null> {
    const resp = await fetch(
      `${this.baseUrl}/sessions/${this.sessionId}/frame?x=${x}&y=${y}`,
    );
    if (!resp.ok) await reject(resp);
    const seq = Number(resp.headers.get("X-Frame-Seq"));
    const data = await resp.arrayBuffer();
    return this.view.acceptFrame(seq) ? data : null;
  }

  async submitQuestionnaire(answers: Record<string, string | boolean>): Promise<void> {
    const resp = await fetch(
      `${this.baseUrl}/sessions/${this.sessionId}/questionnaire`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ answers }),
      },
    );
    if (!resp.ok) await reject(resp);
  }

  async downloadLog(force = false): Promise<string> {
    const query = force ? "?force=true" : "";
    const resp = await fetch(
      `${this.baseUrl}/sessions/${this.sessionId}/log${query}`,
    );
    if (!resp.ok) await reject(resp);
    return resp.text();
  }
}
