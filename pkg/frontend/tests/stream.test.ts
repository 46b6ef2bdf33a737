import { describe, expect, it } from "vitest";

import {
  IllegalPhaseError,
  type DeltaPayload,
  type ErrorPayload,
  type FrameHeader,
  type SessionInfo,
} from "../src/protocol.js";
import {
  StreamClosedError,
  StreamConnection,
  type SocketLike,
  type StreamHandlers,
} from "../src/stream.js";
import { ClientSessionView } from "../src/view.js";

class FakeSocket implements SocketLike {
  binaryType = "";
  readyState = 0;
  sent: string[] = [];
  closed = false;
  onopen: ((ev?: any) => void) | null = null;
  onmessage: ((ev: any) => void) | null = null;
  onclose: ((ev?: any) => void) | null = null;
  onerror: ((err?: any) => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
    this.readyState = 3;
    this.onclose?.();
  }

  // test controls
  open(): void {
    this.readyState = 1;
    this.onopen?.();
  }

  message(data: unknown): void {
    this.onmessage?.({ data });
  }
}

function harness(phase: SessionInfo["phase"] = "cue") {
  const view = new ClientSessionView({
    session_id: "sess-9",
    condition: "GCSS",
    break_after: 38,
    frame_size: 640,
    stimulus_size: [1024, 1024],
    coordinate_space: "display",
    render_mode: "screen_centered",
    phase,
    index: 0,
    n_trials: 76,
    cue: "mug",
  });
  const frames: Array<{ bytes: Uint8Array; header: FrameHeader }> = [];
  const deltas: DeltaPayload[] = [];
  const errors: ErrorPayload[] = [];
  let disconnects = 0;
  const handlers: StreamHandlers = {
    onFrame: (bytes, header) => frames.push({ bytes, header }),
    onDelta: (d) => deltas.push(d),
    onError: (e) => errors.push(e),
    onDisconnect: () => {
      disconnects += 1;
    },
  };
  let socket: FakeSocket | null = null;
  let requestedUrl = "";
  const stream = new StreamConnection("http://host:8414", view, handlers, (url) => {
    requestedUrl = url;
    socket = new FakeSocket();
    return socket;
  });
  return {
    view,
    stream,
    frames,
    deltas,
    errors,
    getSocket: () => socket!,
    getUrl: () => requestedUrl,
    getDisconnects: () => disconnects,
  };
}

describe("StreamConnection.connect", () => {
  it("derives the websocket URL from the HTTP base and session id", async () => {
    const h = harness();
    const opening = h.stream.connect();
    expect(h.getUrl()).toBe("ws://host:8414/sessions/sess-9/stream");
    expect(h.getSocket().binaryType).toBe("arraybuffer");
    expect(h.stream.isOpen).toBe(false);
    h.getSocket().open();
    await opening;
    expect(h.stream.isOpen).toBe(true);
  });
});

describe("StreamConnection.sendEvent", () => {
  it("refuses illegal-phase events before they reach the socket", async () => {
    const h = harness("cue");
    const opening = h.stream.connect();
    h.getSocket().open();
    await opening;
    expect(() => h.stream.sendEvent({ event: "gaze", t: 0, x: 1, y: 2 })).toThrowError(
      IllegalPhaseError,
    );
    expect(h.getSocket().sent).toEqual([]);
  });

  it("sends an envelope for a legal event", async () => {
    const h = harness("stimulus");
    const opening = h.stream.connect();
    h.getSocket().open();
    await opening;
    h.stream.sendEvent({ event: "gaze", t: 16, x: 320, y: 200 });
    expect(JSON.parse(h.getSocket().sent[0])).toEqual({
      type: "event",
      session_id: "sess-9",
      payload: { event: "gaze", t: 16, x: 320, y: 200 },
    });
  });

  it("raises when the socket is not open", () => {
    const h = harness("cue");
    expect(() => h.stream.sendEvent({ event: "advance", t: 0 })).toThrowError(
      StreamClosedError,
    );
  });
});

describe("StreamConnection dispatch", () => {
  async function connected(phase: SessionInfo["phase"] = "stimulus") {
    const h = harness(phase);
    const opening = h.stream.connect();
    h.getSocket().open();
    await opening;
    return h;
  }

  it("applies delta envelopes to the view and notifies", async () => {
    const h = await connected("cue");
    h.getSocket().message(
      JSON.stringify({
        type: "delta",
        session_id: "sess-9",
        payload: { phase: "stimulus", index: 0, n_trials: 76 },
      }),
    );
    expect(h.view.phase).toBe("stimulus");
    expect(h.deltas.length).toBe(1);
  });

  it("pairs each frame header with the following binary message", async () => {
    const h = await connected();
    const header = { seq: 1, t: 16, encoding: "png" };
    h.getSocket().message(
      JSON.stringify({ type: "frame", session_id: "sess-9", payload: header }),
    );
    expect(h.frames.length).toBe(0); // header alone paints nothing
    h.getSocket().message(new Uint8Array([0x89, 0x50, 0x4e, 0x47]).buffer);
    expect(h.frames.length).toBe(1);
    expect(h.frames[0].header).toEqual(header);
    expect(Array.from(h.frames[0].bytes)).toEqual([0x89, 0x50, 0x4e, 0x47]);
  });

  it("drops frames whose sequence number does not advance", async () => {
    const h = await connected();
    for (const seq of [1, 1, 2]) {
      h.getSocket().message(
        JSON.stringify({
          type: "frame",
          session_id: "sess-9",
          payload: { seq, t: 16 * seq, encoding: "png" },
        }),
      );
      h.getSocket().message(new Uint8Array([seq]).buffer);
    }
    expect(h.frames.map((f) => f.header.seq)).toEqual([1, 2]);
    expect(h.view.framesDropped).toBe(1);
  });

  it("ignores a binary message with no preceding header", async () => {
    const h = await connected();
    h.getSocket().message(new Uint8Array([1, 2, 3]).buffer);
    expect(h.frames.length).toBe(0);
    expect(h.view.framesDropped).toBe(0);
  });

  it("reports error envelopes and keeps the stream open", async () => {
    const h = await connected();
    h.getSocket().message(
      JSON.stringify({
        type: "error",
        session_id: "sess-9",
        payload: { code: "protocol", message: "event resume not legal in phase stimulus" },
      }),
    );
    expect(h.errors.length).toBe(1);
    expect(h.errors[0].code).toBe("protocol");
    expect(h.stream.isOpen).toBe(true);
    expect(h.getSocket().closed).toBe(false);
  });

  it("signals a disconnect when the socket closes", async () => {
    const h = await connected();
    h.getSocket().close();
    expect(h.getDisconnects()).toBe(1);
    expect(h.stream.isOpen).toBe(false);
  });
});
