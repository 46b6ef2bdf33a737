import {
  eventEnvelope,
  isLegal,
  IllegalPhaseError,
  type DeltaPayload,
  type ErrorPayload,
  type EventPayload,
  type FrameHeader,
} from "./protocol.js";
import type { ClientSessionView } from "./view.js";

// Narrow view of a WebSocket so the browser socket and the node "ws"
// package are interchangeable in tests.
export interface SocketLike {
  binaryType: string;
  readyState: number;
  send(data: string): void;
  close(): void;
  onopen: ((ev?: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
  onclose: ((ev?: any) => void) | null;
  onerror: ((err?: any) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface StreamHandlers {
  onFrame(png: Uint8Array, header: FrameHeader): void;
  onDelta(delta: DeltaPayload): void;
  onError(error: ErrorPayload): void;
  onDisconnect(): void;
}

export class StreamClosedError extends Error {
  constructor() {
    super("stream is not open");
    this.name = "StreamClosedError";
  }
}

const OPEN = 1;

// The per-session frame stream: events out, delta/frame/error
// envelopes in, with each frame header immediately followed by one
// binary PNG message. Frame pairing relies on that ordering.
export class StreamConnection {
  private socket: SocketLike | null = null;
  private pendingHeader: FrameHeader | null = null;

  constructor(
    private readonly httpBase: string,
    readonly view: ClientSessionView,
    private readonly handlers: StreamHandlers,
    private readonly factory: SocketFactory,
  ) {}

  get isOpen(): boolean {
    return this.socket !== null && this.socket.readyState === OPEN;
  }

  connect(): Promise<void> {
    const wsBase = this.httpBase.replace(/^http/, "ws");
    const socket = this.factory(
      `${wsBase}/sessions/${this.view.sessionId}/stream`,
    );
    socket.binaryType = "arraybuffer";
    this.socket = socket;
    socket.onmessage = (ev) => this.dispatch(ev.data);
    socket.onclose = () => {
      this.socket = null;
      this.handlers.onDisconnect();
    };
    socket.onerror = () => socket.close();
    return new Promise((resolve) => {
      socket.onopen = () => resolve();
      if (socket.readyState === OPEN) resolve();
    });
  }

  sendEvent(payload: EventPayload): void {
    if (!isLegal(payload.event, this.view.phase)) {
      throw new IllegalPhaseError(payload.event, this.view.phase);
    }
    if (!this.isOpen) throw new StreamClosedError();
    this.socket!.send(JSON.stringify(eventEnvelope(this.view.sessionId, payload)));
  }

  close(): void {
    this.socket?.close();
  }

  private dispatch(data: unknown): void {
    if (typeof data === "string") {
      const doc = JSON.parse(data) as {
        type: string;
        payload: DeltaPayload & FrameHeader & ErrorPayload;
      };
      if (doc.type === "frame") {
        this.pendingHeader = doc.payload;
      } else if (doc.type === "delta") {
        this.view.applyDelta(doc.payload);
        this.handlers.onDelta(doc.payload);
      } else if (doc.type === "error") {
        this.handlers.onError(doc.payload);
      }
      return;
    }
    // Binary message: the PNG paired with the last frame header.
    const header = this.pendingHeader;
    this.pendingHeader = null;
    if (header === null) return;
    if (!this.view.acceptFrame(header.seq)) return;
    const bytes =
      data instanceof ArrayBuffer
        ? new Uint8Array(data)
        : new Uint8Array(data as ArrayBufferLike);
    this.handlers.onFrame(bytes, header);
  }
}
