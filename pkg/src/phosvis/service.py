"""Local session server binding the engine to interactive clients.

Lifecycle runs over plain HTTP; each session additionally exposes one
bidirectional WebSocket stream carrying gaze samples in and rendered
frames out.  Message envelopes, event payloads and coordinate
conventions are documented in PROTOCOL.md at the repository root; the
field names there are load-bearing for client compatibility.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field, replace

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Response, WebSocket
from fastapi.responses import PlainTextResponse

from . import experiment, imaging, maskstore, simulator

QUESTIONNAIRE_CHOICE_ITEMS = (
    "overall_preference",
    "object_clarity",
    "visual_comfort",
    "eye_fatigue",
    "mental_effort",
    "visual_appeal",
)
QUESTIONNAIRE_BOOL_ITEMS = (
    "gcss_improved_over_time",
    "edges_improved_over_time",
)

RENDER_MODE = "screen_centered"


@dataclass
class ServiceConfig:
    dataset_dir: str
    sim: simulator.SimParams = field(default_factory=simulator.SimParams)
    edge_params: imaging.EdgeParams = field(default_factory=imaging.EdgeParams)
    edge_gain: float = maskstore.DEFAULT_EDGE_GAIN
    selection_policy: str = "union"


class SessionRuntime:
    """Server-side state for one running session."""

    def __init__(self, session_id: str, dataset: experiment.Dataset,
                 plan: experiment.SessionPlan, config: ServiceConfig,
                 sim: simulator.SimParams, input_source: str):
        self.session_id = session_id
        self.dataset = dataset
        self.plan = plan
        self.config = config
        self.sim = sim
        self.input_source = input_source
        self.state = experiment.SessionState(
            plan, archives=dataset.archive,
            selection_policy=config.selection_policy,
        )
        self.layout = simulator.sample_layout(sim, seed=plan.seed)
        self.frame_seq = 0
        self.questionnaire: dict | None = None
        self._renderer: simulator.PhospheneRenderer | None = None
        self._edges: dict = {}
        self._coloured_png: dict = {}
        self._source_rgb: dict = {}

    # -- stimulus helpers ---------------------------------------------------

    def _source(self, image_id: str) -> np.ndarray:
        if image_id not in self._source_rgb:
            for im in self.dataset.images:
                if im.image_id == image_id:
                    if im.image_path is None or not im.image_path.exists():
                        raise experiment.DataError(
                            f"image {image_id!r} has no source file"
                        )
                    self._source_rgb[image_id] = imaging.read_rgb(im.image_path)
                    break
            else:
                raise experiment.DataError(f"unknown image id {image_id!r}")
        return self._source_rgb[image_id]

    def edges_for(self, image_id: str) -> np.ndarray:
        if image_id not in self._edges:
            archive = self.dataset.archive(image_id)
            luma = imaging.preprocess_luma(self._source(image_id),
                                           archive.width, archive.height)
            self._edges[image_id] = imaging.canny_edges(luma, self.config.edge_params)
        return self._edges[image_id]

    def coloured_png(self, image_id: str) -> bytes:
        if image_id not in self._coloured_png:
            size = self.sim.frame_size
            rgb = imaging.resize(self._source(image_id), size, size)
            self._coloured_png[image_id] = imaging.encode_rgb_png(rgb)
        return self._coloured_png[image_id]

    def renderer(self, stim_shape: tuple) -> simulator.PhospheneRenderer:
        if self._renderer is None or self._renderer.stim_shape != stim_shape:
            self._renderer = simulator.PhospheneRenderer(self.layout, self.sim,
                                                         stim_shape)
        return self._renderer

    def stimulus_size(self) -> tuple:
        archive = self.dataset.archive(self.plan.trials[0].image_id)
        return (archive.width, archive.height)

    def to_stimulus(self, x: float, y: float, image_id: str) -> tuple:
        """Display pixels -> stimulus pixels for the given image."""
        archive = self.dataset.archive(image_id)
        size = self.sim.frame_size
        return (int(round(x * archive.width / size)),
                int(round(y * archive.height / size)))

    def render_current(self, gx_display: float, gy_display: float) -> np.ndarray:
        """Compose and render the current trial's frame (grayscale [0, 1]).

        Only legal in the stimulus phase of a GCSS or Edges session; the
        Coloured condition serves pass-through images instead.
        """
        spec = self.state.current_trial
        archive = self.dataset.archive(spec.image_id)
        gx, gy = self.to_stimulus(gx_display, gy_display, spec.image_id)
        edges = self.edges_for(spec.image_id)
        if self.plan.condition == "GCSS":
            stim = maskstore.compose_gcss(
                archive, maskstore.GazePoint(gx, gy), edges,
                edge_gain=self.config.edge_gain,
                policy=self.config.selection_policy,
            )
        else:
            stim = edges
        renderer = self.renderer(stim.shape)
        return renderer.render(stim, (gx, gy))

    def frame_png(self, gx_display: float, gy_display: float) -> tuple:
        """(bytes, seq, media_kind) for the current trial and gaze."""
        spec = self.state.current_trial
        if self.state.phase != "stimulus" or spec is None:
            raise experiment.ProtocolError(
                f"frame requested in phase {self.state.phase!r}"
            )
        if self.plan.condition == "Coloured":
            data = self.coloured_png(spec.image_id)
        else:
            data = imaging.encode_gray_png(
                self.render_current(gx_display, gy_display))
        self.frame_seq += 1
        return data, self.frame_seq, "png"

    # -- events -------------------------------------------------------------

    def ingest(self, etype: str, payload: dict) -> dict:
        """Apply one client event; returns the state delta payload."""
        if etype == "gaze":
            spec = self.state.current_trial
            if spec is None:
                raise experiment.ProtocolError(
                    f"gaze in phase {self.state.phase!r}")
            gx, gy = self.to_stimulus(payload["x"], payload["y"], spec.image_id)
            experiment.advance(self.state, {
                "type": "gaze", "t": payload["t"], "x": gx, "y": gy,
            })
            return self.delta()
        if etype in ("click_left", "click_right"):
            spec = self.state.current_trial
            if spec is None:
                raise experiment.ProtocolError(
                    f"{etype} in phase {self.state.phase!r}")
            if etype == "click_left":
                gx, gy = self.to_stimulus(payload["x"], payload["y"], spec.image_id)
                decision = experiment.Decision(type="click", x=gx, y=gy)
            else:
                decision = experiment.Decision(type="absent")
            experiment.advance(self.state, {
                "type": "decide", "t": payload["t"], "decision": decision,
            })
            d = self.delta()
            rec = self.state.records[-1]
            d["outcome"] = rec.outcome
            d["rt_ms"] = rec.rt_ms
            return d
        if etype == "advance":
            experiment.advance(self.state, {
                "type": "show_stimulus", "t": payload.get("t", 0),
            })
            return self.delta()
        if etype == "resume":
            experiment.advance(self.state, {"type": "resume"})
            return self.delta()
        raise experiment.ProtocolError(f"unknown event type {etype!r}")

    def delta(self) -> dict:
        d = {
            "phase": self.state.phase,
            "index": self.state.index,
            "n_trials": len(self.plan.trials),
        }
        if self.state.phase == "cue" and self.state.current_trial is not None:
            d["cue"] = self.state.current_trial.target_label
        return d

    def export_log(self) -> str:
        text = experiment.export_log(self.state, self.session_id)
        if self.questionnaire is not None:
            meta = {
                "type": "questionnaire",
                "session_id": self.session_id,
                "input_source": self.input_source,
                "render_mode": RENDER_MODE,
                "answers": self.questionnaire,
            }
            text += json.dumps(meta, separators=(",", ":")) + "\n"
        return text


def envelope(msg_type: str, session_id: str, payload: dict) -> dict:
    return {"type": msg_type, "session_id": session_id, "payload": payload}


def validate_questionnaire(answers: dict) -> dict:
    if not isinstance(answers, dict):
        raise ValueError("answers must be an object")
    expected = set(QUESTIONNAIRE_CHOICE_ITEMS) | set(QUESTIONNAIRE_BOOL_ITEMS)
    got = set(answers)
    if got != expected:
        missing = sorted(expected - got)
        extra = sorted(got - expected)
        raise ValueError(f"questionnaire mismatch: missing {missing}, extra {extra}")
    for item in QUESTIONNAIRE_CHOICE_ITEMS:
        if answers[item] not in ("GCSS", "Edges"):
            raise ValueError(f"{item}: answer must be 'GCSS' or 'Edges'")
    for item in QUESTIONNAIRE_BOOL_ITEMS:
        if not isinstance(answers[item], bool):
            raise ValueError(f"{item}: answer must be true or false")
    return answers


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="phosvis session server")
    dataset = experiment.Dataset.from_dir(config.dataset_dir)
    sessions: dict[str, SessionRuntime] = {}
    app.state.sessions = sessions

    def get_session(session_id: str) -> SessionRuntime:
        rt = sessions.get(session_id)
        if rt is None:
            raise HTTPException(status_code=404, detail=f"no session {session_id!r}")
        return rt

    @app.get("/health")
    def health():
        return {"status": "ok", "sessions": len(sessions)}

    @app.post("/sessions")
    def create_session(body: dict):
        condition = body.get("condition")
        if condition not in experiment.CONDITIONS:
            raise HTTPException(status_code=422,
                                detail=f"condition must be one of {experiment.CONDITIONS}")
        if "seed" not in body:
            raise HTTPException(status_code=422, detail="seed is required")
        try:
            seed = int(body["seed"])
        except (TypeError, ValueError):
            raise HTTPException(status_code=422, detail="seed must be an integer")
        sim = config.sim
        overrides = body.get("sim") or {}
        if overrides:
            try:
                sim = replace(sim, **overrides)
            except (TypeError, ValueError) as exc:
                raise HTTPException(status_code=422, detail=f"bad sim overrides: {exc}")
        svc_config = config
        if "policy" in body:
            if body["policy"] not in maskstore.SELECTION_POLICIES:
                raise HTTPException(status_code=422,
                                    detail=f"policy must be one of {maskstore.SELECTION_POLICIES}")
            svc_config = replace(config, selection_policy=body["policy"])
        try:
            plan = experiment.build_session(dataset, condition, seed)
        except experiment.ConfigurationError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        session_id = uuid.uuid4().hex
        rt = SessionRuntime(session_id, dataset, plan, svc_config, sim,
                            input_source=body.get("input_source", "mouse"))
        sessions[session_id] = rt
        sw, sh = rt.stimulus_size()
        out = {
            "session_id": session_id,
            "condition": condition,
            "n_trials": len(plan.trials),
            "break_after": plan.break_after,
            "frame_size": sim.frame_size,
            "stimulus_size": [sw, sh],
            "coordinate_space": "display",
            "render_mode": RENDER_MODE,
        }
        out.update(rt.delta())
        return out

    @app.post("/sessions/{session_id}/events")
    def ingest_event(session_id: str, body: dict):
        rt = get_session(session_id)
        if body.get("type") != "event":
            raise HTTPException(status_code=422, detail="envelope type must be 'event'")
        if body.get("session_id") != session_id:
            raise HTTPException(status_code=422, detail="envelope session_id mismatch")
        payload = body.get("payload") or {}
        etype = payload.get("event")
        try:
            delta = rt.ingest(etype, payload)
        except experiment.ProtocolError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=f"bad event payload: {exc}")
        return envelope("delta", session_id, delta)

    @app.get("/sessions/{session_id}/frame")
    def next_frame(session_id: str, x: float = Query(...), y: float = Query(...)):
        rt = get_session(session_id)
        try:
            data, seq, kind = rt.frame_png(x, y)
        except experiment.ProtocolError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return Response(content=data, media_type="image/png",
                        headers={"X-Frame-Seq": str(seq)})

    @app.post("/sessions/{session_id}/questionnaire")
    def submit_questionnaire(session_id: str, body: dict):
        rt = get_session(session_id)
        try:
            rt.questionnaire = validate_questionnaire(body.get("answers"))
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return envelope("ack", session_id, {"questionnaire": "stored"})

    @app.get("/sessions/{session_id}/log")
    def export_log(session_id: str, force: bool = False):
        rt = get_session(session_id)
        if rt.state.phase != "done" and not force:
            raise HTTPException(
                status_code=409,
                detail=f"session in phase {rt.state.phase!r}; pass force=true "
                       "to export a partial log",
            )
        return PlainTextResponse(rt.export_log(), media_type="application/x-ndjson")

    @app.websocket("/sessions/{session_id}/stream")
    async def stream(ws: WebSocket, session_id: str):
        rt = sessions.get(session_id)
        await ws.accept()
        if rt is None:
            await ws.send_json(envelope("error", session_id,
                                        {"code": "unknown_session",
                                         "message": f"no session {session_id!r}"}))
            await ws.close()
            return
        while True:
            try:
                msg = await ws.receive_json()
            except Exception:
                break
            if not isinstance(msg, dict) or msg.get("type") != "event":
                await ws.send_json(envelope("error", session_id,
                                            {"code": "bad_envelope",
                                             "message": "expected an event envelope"}))
                continue
            payload = msg.get("payload") or {}
            etype = payload.get("event")
            try:
                if etype == "gaze":
                    delta = rt.ingest(etype, payload)
                    data, seq, kind = rt.frame_png(payload["x"], payload["y"])
                    await ws.send_json(envelope("frame", session_id, {
                        "seq": seq, "t": payload["t"], "encoding": kind,
                    }))
                    await ws.send_bytes(data)
                else:
                    delta = rt.ingest(etype, payload)
                    await ws.send_json(envelope("delta", session_id, delta))
                    if delta.get("phase") == "done":
                        await ws.close()
                        break
            except experiment.ProtocolError as exc:
                await ws.send_json(envelope("error", session_id,
                                            {"code": "protocol", "message": str(exc)}))
            except (KeyError, TypeError, ValueError) as exc:
                await ws.send_json(envelope("error", session_id,
                                            {"code": "bad_payload", "message": str(exc)}))

    return app
