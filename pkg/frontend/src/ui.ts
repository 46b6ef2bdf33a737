// Browser experiment runner. Wires the session client, the frame
// stream, the gaze sampler and the questionnaire into the DOM screens
// defined in index.html. All protocol legality is enforced by the
// shared guard, so a handler firing in the wrong phase surfaces as an
// IllegalPhaseError in the console instead of a server rejection.

import { SessionClient } from "./client.js";
import { GazeSampler } from "./gazeSampler.js";
import { LatencyMeter } from "./latency.js";
import type { Condition } from "./protocol.js";
import {
  BOOL_ITEMS,
  BOOL_LABELS,
  CHOICE_ITEMS,
  CHOICE_LABELS,
  buildAnswers,
  missingItems,
  type Answers,
} from "./questionnaire.js";
import { StreamConnection } from "./stream.js";

const $ = (id: string): HTMLElement => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
};

const screens = ["setup", "cue", "stimulus", "pause", "rest", "survey", "finished"] as const;
type Screen = (typeof screens)[number];

function show(screen: Screen): void {
  for (const s of screens) $(s).style.display = s === screen ? "flex" : "none";
}

interface Runner {
  client: SessionClient;
  stream: StreamConnection;
  sampler: GazeSampler;
  latency: LatencyMeter;
  pointer: [number, number];
  t0: number;
}

let runner: Runner | null = null;

function now(r: Runner): number {
  return Math.round(performance.now() - r.t0);
}

function paintFrame(r: Runner, png: Uint8Array): void {
  const canvas = $("frame") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const copy = new Uint8Array(png);
  const blob = new Blob([copy.buffer], { type: "image/png" });
  createImageBitmap(blob).then((bitmap) => {
    ctx.drawImage(bitmap, 0, 0, canvas.width, canvas.height);
    drawCrosshair(ctx, r.pointer);
    r.latency.framePainted(performance.now());
    const median = r.latency.median();
    $("latency").textContent =
      median === null ? "" : `median pointer→paint ${median.toFixed(1)} ms`;
  });
}

function drawCrosshair(ctx: CanvasRenderingContext2D, [x, y]: [number, number]): void {
  ctx.strokeStyle = "#e33";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(x - 8, y);
  ctx.lineTo(x + 8, y);
  ctx.moveTo(x, y - 8);
  ctx.lineTo(x, y + 8);
  ctx.stroke();
}

function applyPhase(r: Runner): void {
  const view = r.client.view;
  $("progress").textContent = `trial ${Math.min(view.index + 1, view.nTrials)} / ${view.nTrials}`;
  if (view.phase === "cue") {
    $("cue-label").textContent = view.cue ?? "";
    show("cue");
  } else if (view.phase === "stimulus") {
    show("stimulus");
  } else if (view.phase === "break") {
    show("rest");
  } else if (view.phase === "done") {
    r.stream.close();
    renderSurvey();
    show("survey");
  }
}

// -- stimulus handlers ------------------------------------------------------

function canvasCoords(ev: MouseEvent): [number, number] {
  const canvas = $("frame") as HTMLCanvasElement;
  const rect = canvas.getBoundingClientRect();
  return [
    ((ev.clientX - rect.left) / rect.width) * canvas.width,
    ((ev.clientY - rect.top) / rect.height) * canvas.height,
  ];
}

function wireStimulus(r: Runner): void {
  const canvas = $("frame") as HTMLCanvasElement;
  canvas.addEventListener("pointermove", (ev) => {
    if (r.client.view.phase !== "stimulus") return;
    const [x, y] = canvasCoords(ev);
    r.pointer = [r.sampler.clamp(x), r.sampler.clamp(y)];
    r.latency.pointerMoved(performance.now());
    r.sampler.pointerMove(x, y);
  });
  canvas.addEventListener("click", (ev) => {
    if (r.client.view.phase !== "stimulus") return;
    const [x, y] = canvasCoords(ev);
    r.client
      .clickLeft(now(r), r.sampler.clamp(x), r.sampler.clamp(y))
      .then(() => applyPhase(r))
      .catch(console.error);
  });
  canvas.addEventListener("contextmenu", (ev) => {
    ev.preventDefault();
    if (r.client.view.phase !== "stimulus") return;
    r.client
      .clickRight(now(r))
      .then(() => applyPhase(r))
      .catch(console.error);
  });
}

// -- screens ----------------------------------------------------------------

async function start(): Promise<void> {
  const baseUrl = ($("server") as HTMLInputElement).value.replace(/\/$/, "");
  const condition = ($("condition") as HTMLSelectElement).value as Condition;
  const seed = Number(($("seed") as HTMLInputElement).value);
  const client = await SessionClient.create(baseUrl, {
    condition,
    seed,
    input_source: "mouse",
  });

  const r: Runner = {
    client,
    latency: new LatencyMeter(),
    pointer: [320, 320],
    t0: performance.now(),
    sampler: null as unknown as GazeSampler,
    stream: null as unknown as StreamConnection,
  };
  r.stream = new StreamConnection(
    baseUrl,
    client.view,
    {
      onFrame: (png) => paintFrame(r, png),
      onDelta: () => applyPhase(r),
      onError: (err) => console.error("stream error:", err.code, err.message),
      onDisconnect: () => {
        if (client.view.phase !== "done") show("pause");
      },
    },
    (url) => new WebSocket(url),
  );
  r.sampler = new GazeSampler(client.view.frameSize, (x, y) => {
    if (r.stream.isOpen && client.view.phase === "stimulus") {
      r.stream.sendEvent({ event: "gaze", t: now(r), x, y });
    }
  });
  await r.stream.connect();
  runner = r;
  wireStimulus(r);
  applyPhase(r);
}

function renderSurvey(): void {
  const form = $("survey-items");
  form.innerHTML = "";
  for (const item of CHOICE_ITEMS) {
    const row = document.createElement("div");
    row.className = "item";
    row.innerHTML =
      `<p>${CHOICE_LABELS[item]}</p>` +
      `<label><input type="radio" name="${item}" value="GCSS"> GCSS</label>` +
      `<label><input type="radio" name="${item}" value="Edges"> Edges</label>`;
    form.appendChild(row);
  }
  for (const item of BOOL_ITEMS) {
    const row = document.createElement("div");
    row.className = "item";
    row.innerHTML =
      `<p>${BOOL_LABELS[item]}</p>` +
      `<label><input type="radio" name="${item}" value="true"> yes</label>` +
      `<label><input type="radio" name="${item}" value="false"> no</label>`;
    form.appendChild(row);
  }
  form.addEventListener("change", refreshSubmit);
  refreshSubmit();
}

function surveyDraft(): Partial<Answers> {
  const draft: Partial<Answers> = {};
  for (const item of CHOICE_ITEMS) {
    const picked = document.querySelector<HTMLInputElement>(
      `input[name="${item}"]:checked`,
    );
    if (picked) draft[item] = picked.value as "GCSS" | "Edges";
  }
  for (const item of BOOL_ITEMS) {
    const picked = document.querySelector<HTMLInputElement>(
      `input[name="${item}"]:checked`,
    );
    if (picked) draft[item] = picked.value === "true";
  }
  return draft;
}

function refreshSubmit(): void {
  const missing = missingItems(surveyDraft());
  ($("submit-survey") as HTMLButtonElement).disabled = missing.length > 0;
  $("survey-hint").textContent =
    missing.length > 0 ? `${missing.length} item(s) left` : "";
}

async function submitSurvey(): Promise<void> {
  if (!runner) return;
  await runner.client.submitQuestionnaire(buildAnswers(surveyDraft()));
  const log = await runner.client.downloadLog();
  const anchor = $("download") as HTMLAnchorElement;
  anchor.href = URL.createObjectURL(new Blob([log], { type: "application/x-ndjson" }));
  anchor.download = `${runner.client.sessionId}.jsonl`;
  show("finished");
}

window.addEventListener("DOMContentLoaded", () => {
  show("setup");
  $("start").addEventListener("click", () => start().catch(console.error));
  $("show-stimulus").addEventListener("click", () => {
    if (!runner) return;
    runner.client
      .advance(now(runner))
      .then(() => applyPhase(runner!))
      .catch(console.error);
  });
  $("resume").addEventListener("click", () => {
    if (!runner) return;
    runner.client
      .resume()
      .then(() => applyPhase(runner!))
      .catch(console.error);
  });
  $("reconnect").addEventListener("click", () => {
    if (!runner) return;
    runner.stream
      .connect()
      .then(() => applyPhase(runner!))
      .catch(console.error);
  });
  $("submit-survey").addEventListener("click", () => submitSurvey().catch(console.error));
});
