"""Driving the HTTP/WebSocket service from a client's point of view.

Spins the app up in-process (no network socket needed), creates a
session, plays a handful of trials over REST, streams gaze-contingent
frames over the WebSocket, then finishes the run, submits the
questionnaire and verifies the exported log replays byte-identically.

The same app serves real browsers via  python3 -m phosvis.cli serve.

Run from the repository root:  python3 demos/06_service_client.py
"""

import pathlib
import tempfile

import numpy as np
from fastapi.testclient import TestClient

from phosvis import datasets, experiment, imaging, service

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

data_dir = pathlib.Path(tempfile.mkdtemp(prefix="scenes_"))
datasets.make_synth_dataset(data_dir, seed=3, images_per_stratum=10, size=1024)

app = service.create_app(service.ServiceConfig(dataset_dir=str(data_dir)))
client = TestClient(app)
client.__enter__()  # run lifespan; a real deployment uses uvicorn

created = client.post("/sessions", json={"condition": "GCSS", "seed": 42}).json()
sid = created["session_id"]
stim_w, stim_h = created["stimulus_size"]
print(f"session {sid}: {created['n_trials']} trials, "
      f"break after {created['break_after']}, "
      f"{created['frame_size']}px frames, stimulus {stim_w}x{stim_h}, "
      f"coords in {created['coordinate_space']} space")


def send(name, **payload):
    resp = client.post(f"/sessions/{sid}/events", json={
        "type": "event", "session_id": sid,
        "payload": {"event": name, **payload},
    })
    resp.raise_for_status()
    return resp.json()["payload"]


# The server owns the plan; a client only needs the cue label it
# receives when advancing.  To script clicks we rebuild the plan from
# the same dataset and seed, exactly like a replay tool would.
dataset = experiment.Dataset.from_dir(data_dir)
plan = experiment.build_session(dataset, "GCSS", 42)

# The create response doubles as the first delta: phase "cue" plus the
# label to search for.  Later cues arrive in the decide deltas.
cue_label = created["cue"]
t = 0
for i, spec in enumerate(plan.trials):
    shown = send("advance", t=t)
    if i < 3:
        print(f"trial {i}: cue {cue_label!r}, phase now {shown['phase']}")
    send("gaze", t=t + 16, x=320.0, y=240.0)

    if i == 0:
        # Gaze-contingent rendering: same endpoint, two gaze positions.
        r1 = client.get(f"/sessions/{sid}/frame", params={"x": 200, "y": 200})
        r2 = client.get(f"/sessions/{sid}/frame", params={"x": 800, "y": 820})
        f1 = imaging.decode_png(r1.content)
        print(f"frame: {f1.shape} px, seq {r1.headers['X-Frame-Seq']} then "
              f"{r2.headers['X-Frame-Seq']}, "
              f"content moved: {r1.content != r2.content}")

    t += 1100
    if spec.target_present and i % 2 == 0:
        arc = dataset.archive(spec.image_id)
        mask = next(m for m in arc.masks if m.label == spec.target_label)
        ys, xs = np.nonzero(mask.bitmap)
        delta = send("click_left", t=t,
                     x=int(xs[0]) * created["frame_size"] / stim_w,
                     y=int(ys[0]) * created["frame_size"] / stim_h)
    else:
        delta = send("click_right", t=t)
    if i < 3:
        print(f"trial {i}: outcome {delta['outcome']}, rt {delta['rt_ms']} ms")
    if delta["phase"] == "break":
        print(f"break reached after trial {i}; resuming")
        delta = send("resume")
    cue_label = delta.get("cue")
    t += 300

print(f"session phase: {delta['phase']}")

# The WebSocket stream pairs each frame envelope with a binary PNG.
ws_created = client.post("/sessions",
                         json={"condition": "Edges", "seed": 7}).json()
wid = ws_created["session_id"]
with client.websocket_connect(f"/sessions/{wid}/stream") as ws:
    ws.send_json({"type": "event", "session_id": wid,
                  "payload": {"event": "advance", "t": 0}})
    print(f"ws delta: phase {ws.receive_json()['payload']['phase']}")
    ws.send_json({"type": "event", "session_id": wid,
                  "payload": {"event": "gaze", "t": 16, "x": 320.0, "y": 240.0}})
    head = ws.receive_json()
    png = ws.receive_bytes()
    print(f"ws frame: seq {head['payload']['seq']}, "
          f"{head['payload']['encoding']}, {len(png)} bytes")

log = client.get(f"/sessions/{sid}/log").text
records = experiment.parse_log(log)
replayed = experiment.replay_log(log, dataset.archive)
print(f"log: {len(records)} records, replay byte-identical: {replayed == log}")

# Submitting the questionnaire appends one metadata trailer line; the
# trial records above it are untouched.
answers = {k: "GCSS" for k in service.QUESTIONNAIRE_CHOICE_ITEMS}
answers.update({k: True for k in service.QUESTIONNAIRE_BOOL_ITEMS})
ack = client.post(f"/sessions/{sid}/questionnaire", json={"answers": answers})
final = client.get(f"/sessions/{sid}/log").text
(OUT / "service_session.jsonl").write_text(final)
print(f"questionnaire: {ack.json()['type']}; log grew by "
      f"{len(final.splitlines()) - len(log.splitlines())} metadata line")

client.__exit__(None, None, None)
